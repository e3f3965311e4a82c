"""Fit-quality criteria: MSE, MAE and goodness of FIT (percent)."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

DEFAULT_WARMUP = 720


class UndefinedFitError(ValueError):
    """FIT is undefined because the measured series does not vary."""


def _pair(measured, simulated):
    ym = np.asarray(measured, dtype=float).reshape(-1)
    ys = np.asarray(simulated, dtype=float).reshape(-1)
    if ym.shape != ys.shape:
        raise ValueError(f"length mismatch: measured {ym.size}, simulated {ys.size}")
    if ym.size == 0:
        raise ValueError("empty series")
    return ym, ys


def mse(measured, simulated) -> float:
    ym, ys = _pair(measured, simulated)
    return float(np.mean((ym - ys) ** 2))


def mae(measured, simulated) -> float:
    ym, ys = _pair(measured, simulated)
    return float(np.mean(np.abs(ym - ys)))


def goodness_of_fit(measured, simulated) -> float:
    """``100 * (1 - |y' - y| / |y' - mean(y')|)`` with Euclidean norms.

    100 is a perfect fit, 0 is no better than predicting the mean, and the
    value is unbounded below.
    """
    ym, ys = _pair(measured, simulated)
    if ym.size < 2:
        raise UndefinedFitError("FIT undefined: need at least 2 samples")
    spread = np.linalg.norm(ym - ym.mean())
    if spread == 0.0:
        raise UndefinedFitError("FIT undefined: measured series is constant")
    return float(100.0 * (1.0 - np.linalg.norm(ym - ys) / spread))


@dataclass
class FitMetrics:
    mse: float
    mae: float
    fit_percent: float
    n_samples: int
    warmup_excluded: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(measured, simulated, warmup=DEFAULT_WARMUP, mask=None) -> FitMetrics:
    """All three criteria over the samples after ``warmup`` (and where ``mask`` is true).

    NaNs in ``measured`` are treated as missing and skipped.
    """
    ym, ys = _pair(measured, simulated)
    keep = np.ones(ym.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if keep.shape != ym.shape:
        raise ValueError("mask length does not match the series")
    warmup = int(warmup)
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    keep[:warmup] = False
    keep &= np.isfinite(ym)
    if not keep.any():
        raise ValueError(f"no samples left after excluding a warm-up of {warmup}")
    a, b = ym[keep], ys[keep]
    return FitMetrics(mse=mse(a, b), mae=mae(a, b), fit_percent=goodness_of_fit(a, b),
                      n_samples=int(keep.sum()), warmup_excluded=warmup)
