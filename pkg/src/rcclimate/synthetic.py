"""Reproducible synthetic climate records and reference parameter sets.

Used by the test-suite, the benchmark and the round-trip identification
experiments, since no measured building data ships with the package.
"""
from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from .data_io import ClimateDataset, TimeSeries, rh_to_vapour_pressure
from .model import HygricParams, ThermalParams

START = datetime(2011, 1, 1, tzinfo=timezone.utc)

# An unheated, heavy masonry room: time constants of roughly 1 h, 1 day and 2 weeks.
THERMAL_TRUTH = ThermalParams(
    g_w=180.0, g_i=260.0, g_int=400.0, g_f=25.0, g_fast=60.0,
    c_w=6.0e7, c_i=1.0e6, c_int=1.5e7,
    f_irr=(0.3, 0.8, 1.6, 0.9), t_fixed=11.0,
)

HYGRIC_TRUTH = HygricParams(g_w=0.04, g_i=0.12, g_fast=0.1, c_w=2.0e4, c_i=1.0e3)

HYGRIC_TRUTH_FIXED = HygricParams(g_w=0.04, g_i=0.12, g_fast=0.1, c_w=2.0e4, c_i=1.0e3,
                                  g_f=0.05, p_fixed=1500.0)


def _ar1(rng, n, phi, sigma):
    e = rng.normal(0.0, sigma * np.sqrt(1 - phi ** 2), n)
    out = np.empty(n)
    acc = 0.0
    for k in range(n):
        acc = phi * acc + e[k]
        out[k] = acc
    return out


def make_climate(hours: int = 8760, seed: int = 0, start: datetime = START) -> ClimateDataset:
    """Temperate-maritime hourly climate with weather noise.

    Outdoor temperature combines a seasonal and a daily cycle with
    autocorrelated weather; irradiation on the four facades follows a simple
    sun path scaled by season and cloudiness; outdoor vapour pressure follows
    from the temperature and a fluctuating relative humidity.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(hours, dtype=float)
    day = t / 24.0
    hour = t % 24.0
    season = -np.cos(2 * np.pi * (day - 15.0) / 365.0)  # -1 mid-January, +1 mid-July
    weather = _ar1(rng, hours, 0.97, 2.5)
    daily_amp = 3.0 + 2.0 * (season + 1)
    t_e = 10.0 + 7.5 * season + daily_amp * np.sin(2 * np.pi * (hour - 9.0) / 24.0) + weather

    daylength = 12.0 + 4.0 * season
    sunrise = 12.0 - daylength / 2
    phase = np.clip((hour - sunrise) / daylength, 0.0, 1.0)
    up = (hour > sunrise) & (hour < sunrise + daylength)
    elev = np.where(up, np.sin(np.pi * phase), 0.0)
    clouds = np.clip(0.6 + 0.4 * _ar1(rng, hours, 0.9, 1.0), 0.05, 1.0)
    peak = (350.0 + 250.0 * (season + 1) / 2) * clouds
    azimuth = np.pi * phase  # 0 east .. pi west
    irr_e = peak * elev * np.clip(np.cos(azimuth), 0, None)
    irr_w = peak * elev * np.clip(-np.cos(azimuth), 0, None)
    irr_s = peak * elev * np.sin(azimuth) * (1.2 - 0.5 * (season + 1) / 2)
    irr_n = 0.15 * peak * elev

    rh = np.clip(80.0 - 10.0 * season + _ar1(rng, hours, 0.95, 8.0)
                 - 8.0 * np.sin(2 * np.pi * (hour - 9.0) / 24.0), 30.0, 100.0)
    p_e = rh_to_vapour_pressure(np.clip(t_e, -40.0, 60.0), rh)

    def ts(v, unit):
        return TimeSeries(start, 3600.0, v, unit)

    return ClimateDataset(ts(t_e, "degC"), ts(irr_n, "W/m2"), ts(irr_e, "W/m2"),
                          ts(irr_s, "W/m2"), ts(irr_w, "W/m2"), ts(p_e, "Pa"),
                          meta={"source": f"synthetic(seed={seed})"})


def measured_from(params, climate: ClimateDataset, noise: float = 0.0, seed: int = 1) -> TimeSeries:
    """Simulate the indoor series for ``params`` and optionally add Gaussian noise."""
    from .identify import Problem

    kind = params.kind
    unit = "degC" if kind == "thermal" else "Pa"
    y = Problem(kind, climate, None).simulate(params)
    if noise > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise, y.size)
    return TimeSeries(climate.start, climate.step, y, unit)
