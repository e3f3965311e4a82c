"""Inverse modelling: identify model parameters from measured indoor series.

The search runs in a normalised unit box. Conductances, capacitances and
solar factors are mapped logarithmically (they span many decades); fixed-node
levels are mapped linearly. Because the model output is unchanged when all
conductances, capacitances and solar factors are scaled together, the default
bounds pin ``c_i`` to a narrow band around a nominal value; only ratios are
physically meaningful.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .data_io import ClimateDataset, DataError, TimeSeries
from .metrics import DEFAULT_WARMUP, FitMetrics, evaluate
from .model import ParameterError, build_model, params_class
from .optimize import SENTINEL, genetic_search, multistart, polish
from .simulate import HOUR, discretize_zoh, simulate_discrete

SOLVERS = ("multistart-simplex", "genetic")
MIN_SAMPLES = 1000

NOMINAL = {
    "thermal": {"g_w": 100.0, "g_i": 200.0, "g_int": 500.0, "g_f": 20.0, "g_fast": 50.0,
                "c_w": 1e8, "c_i": 1e6, "c_int": 1e7,
                "f_irr_n": 1.0, "f_irr_e": 1.0, "f_irr_s": 1.0, "f_irr_w": 1.0,
                "t_fixed": 10.0},
    "hygric": {"g_w": 0.05, "g_i": 0.1, "g_fast": 0.1, "g_f": 0.01,
               "c_w": 1e5, "c_i": 1e3, "p_fixed": 1000.0},
}
PIN_BAND = 0.01


class FitError(RuntimeError):
    """No usable parameter set could be found."""


def default_bounds(kind: str, pin_c_i: float | None = None) -> dict:
    """Generous physical envelopes; ``c_i`` pinned to +-1 % around its nominal."""
    cls = params_class(kind)
    out = {}
    for name in cls.names:
        if name.startswith("f_irr"):
            out[name] = (0.0, 1e3)
        elif name == "t_fixed":
            out[name] = (-10.0, 30.0)
        elif name == "p_fixed":
            out[name] = (0.0, 4000.0)
        elif name == "g_f" and kind == "hygric":
            out[name] = (0.0, 1e9)
        else:
            out[name] = (1e-6, 1e9)
    c = NOMINAL[kind]["c_i"] if pin_c_i is None else pin_c_i
    out["c_i"] = (c * (1 - PIN_BAND), c * (1 + PIN_BAND))
    return out


@dataclass
class FitConfig:
    bounds: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    solver: str = "multistart-simplex"
    n_starts: int = 8
    max_evals: int = 20000
    f_tol: float = 1e-9
    x_tol: float = 1e-9
    seed: int = 0
    warmup_samples: int = DEFAULT_WARMUP
    restarts: int = 4
    population: int = 40
    generations: int = 150
    n_jobs: int = 1

    def resolved(self, kind: str) -> "FitConfig":
        """Copy with default bounds/initial values filled in for ``kind``."""
        names = params_class(kind).names
        unknown = [n for n in (*self.bounds, *self.initial, *self.fixed) if n not in names]
        if unknown:
            raise ValueError(f"unknown {kind} parameter(s): {', '.join(sorted(set(unknown)))}")
        bounds = default_bounds(kind)
        bounds.update({k: tuple(float(x) for x in v) for k, v in self.bounds.items()})
        initial = {n: NOMINAL[kind][n] for n in names}
        initial.update({k: float(v) for k, v in self.initial.items()})
        for n in names:
            lo, hi = bounds[n]
            initial[n] = min(max(initial[n], lo), hi)
        cfg = FitConfig(**{**asdict(self), "bounds": bounds, "initial": initial,
                           "fixed": {k: float(v) for k, v in self.fixed.items()}})
        cfg.validate(kind)
        return cfg

    def validate(self, kind: str):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.warmup_samples < 0:
            raise ValueError("warmup_samples must be >= 0")
        if self.population < 8 or self.population % 2:
            raise ValueError("population must be an even number >= 8")
        signed = {"t_fixed"}
        for name, (lo, hi) in self.bounds.items():
            if name not in signed and lo < 0:
                raise ValueError(f"lower bound of {name} must be >= 0")
            if not lo < hi:
                raise ValueError(f"bounds of {name}: lower must be < upper")
        if len(self.fixed) == len(params_class(kind).names):
            raise ValueError("every parameter is fixed; nothing to identify")

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown fit config keys: {', '.join(sorted(extra))}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = {k: list(v) for k, v in d["bounds"].items()}
        return d


class ParamSpace:
    """Bijection between a parameter vector and the free unit-box coordinates."""

    def __init__(self, kind: str, bounds: dict, fixed: dict | None = None):
        cls = params_class(kind)
        self.kind = kind
        self.cls = cls
        self.names = cls.names
        self.fixed = dict(fixed or {})
        self.free = [n for n in self.names if n not in self.fixed]
        self.lo = np.array([bounds[n][0] for n in self.free], dtype=float)
        self.hi = np.array([bounds[n][1] for n in self.free], dtype=float)
        self.log = np.array([n in cls.scaled for n in self.free])
        # shift keeps a zero lower bound reachable on the log scale
        self.shift = np.where(self.lo > 0, 0.0, (self.hi - self.lo) * 1e-12)
        self._zlo = np.where(self.log, np.log(np.where(self.log, self.lo + self.shift, 1.0)), self.lo)
        self._zhi = np.where(self.log, np.log(np.where(self.log, self.hi + self.shift, 1.0)), self.hi)

    @property
    def dim(self) -> int:
        return len(self.free)

    def unit_bounds(self) -> np.ndarray:
        return np.tile([0.0, 1.0], (self.dim, 1))

    def to_unit(self, values: dict) -> np.ndarray:
        p = np.array([values[n] for n in self.free], dtype=float)
        p = np.clip(p, self.lo, self.hi)
        z = np.where(self.log, np.log(np.where(self.log, p + self.shift, 1.0)), p)
        return np.clip((z - self._zlo) / (self._zhi - self._zlo), 0.0, 1.0)

    def from_unit(self, u) -> np.ndarray:
        """Full parameter vector (fixed entries included) for unit coordinates ``u``."""
        u = np.asarray(u, dtype=float)
        z = self._zlo + u * (self._zhi - self._zlo)
        p = np.where(self.log, np.exp(np.where(self.log, z, 0.0)) - self.shift, z)
        # box faces map exactly onto the bounds (the log shift leaves round-off)
        p = np.where(u <= 0.0, self.lo, np.where(u >= 1.0, self.hi, np.clip(p, self.lo, self.hi)))
        full = dict(zip(self.free, p))
        full.update(self.fixed)
        return np.array([full[n] for n in self.names], dtype=float)

    def params(self, u):
        return self.cls.from_vector(self.from_unit(u))


class Problem:
    """Everything an objective evaluation needs, prepared once.

    Builds the input matrix from the climate record, the mask of samples that
    enter the error sum (after warm-up, measured value present) and keeps
    them for repeated simulation.
    """

    def __init__(self, kind: str, climate: ClimateDataset, measured: TimeSeries | None,
                 warmup: int = DEFAULT_WARMUP, dt: float = HOUR):
        self.kind = kind
        self.cls = params_class(kind)
        self.dt = float(dt)
        self.warmup = int(warmup)
        self.start = climate.start
        if kind == "thermal":
            rows = [climate.t_e, climate.irr_n, climate.irr_e, climate.irr_s, climate.irr_w]
        else:
            rows = [climate.p_e]
        base = np.vstack([s.values for s in rows])
        if np.isnan(base).any():
            bad = int(np.argmax(np.isnan(base).any(axis=0)))
            raise DataError(f"climate record has missing values (first at index {bad}); "
                            "gaps longer than the in-fill limit cannot be simulated")
        self.base = np.ascontiguousarray(base)
        self.n = base.shape[1]
        self.measured = None
        self.mask = None
        if measured is not None:
            if measured.start != climate.start or measured.step != climate.step \
                    or len(measured) != len(climate):
                raise DataError("measured series is not aligned with the climate record")
            y = measured.values
            mask = np.isfinite(y)
            mask[: self.warmup] = False
            if not mask.any():
                raise DataError("no measured samples left after the warm-up period")
            if mask.sum() < MIN_SAMPLES:
                warnings.warn(f"only {int(mask.sum())} samples enter the objective; "
                              f"at least {MIN_SAMPLES} are recommended", stacklevel=2)
            self.measured = y
            self.mask = mask

    @property
    def n_used(self) -> int:
        return int(self.mask.sum())

    def inputs(self, params) -> np.ndarray:
        fixed = params.t_fixed if self.kind == "thermal" else params.p_fixed
        u = np.empty((self.base.shape[0] + 1, self.n))
        u[:-1] = self.base
        u[-1] = fixed
        return u

    def simulate(self, params, x0=None) -> np.ndarray:
        if not isinstance(params, self.cls):
            params = self.cls.from_vector(params)
        model = build_model(params)
        u = self.inputs(params)
        if x0 is None:
            x0 = model.steady_state(u[:, 0])
        return simulate_discrete(discretize_zoh(model, self.dt), u, x0).y

    def sse(self, params) -> float:
        """Summed squared error; unusable or unstable parameter sets give ``SENTINEL``."""
        if self.measured is None:
            raise ValueError("problem has no measured series")
        try:
            if not isinstance(params, self.cls):
                params = self.cls.from_vector(params)
            model = build_model(params)
            if not np.all(np.linalg.eigvals(model.a).real < 0.0):
                return SENTINEL
            u = self.inputs(params)
            x0 = model.steady_state(u[:, 0])
            y = simulate_discrete(discretize_zoh(model, self.dt), u, x0).y
        except (ParameterError, np.linalg.LinAlgError, ValueError):
            return SENTINEL
        r = self.measured[self.mask] - y[self.mask]
        value = float(np.dot(r, r))
        return value if math.isfinite(value) else SENTINEL


def objective(params, climate: ClimateDataset, measured: TimeSeries, model_kind: str,
              warmup: int = DEFAULT_WARMUP, dt: float = HOUR) -> float:
    """Summed squared error of the simulated indoor series over the post-warm-up window."""
    return Problem(model_kind, climate, measured, warmup, dt).sse(params)


@dataclass
class FitResult:
    params: object
    objective: float
    metrics: FitMetrics
    evals: int
    converged: bool
    seed: int
    model_kind: str
    solver: str
    starts: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "tool": {"name": "rcclimate", "version": __version__},
            "model_kind": self.model_kind,
            "solver": self.solver,
            "seed": self.seed,
            "params": self.params.as_dict(),
            "objective_sse": self.objective,
            "metrics": self.metrics.to_dict(),
            "evals": self.evals,
            "converged": self.converged,
            "starts": self.starts,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fit(config: FitConfig, climate: ClimateDataset, measured: TimeSeries, model_kind: str,
        dt: float = HOUR) -> FitResult:
    """Identify parameters of ``model_kind`` that reproduce ``measured``.

    Runs the initialisation once (input matrix, error mask, constraints,
    start values), then the configured solver, and returns the best result.
    A fixed ``seed`` makes the whole run reproducible.
    """
    cfg = config.resolved(model_kind)
    problem = Problem(model_kind, climate, measured, cfg.warmup_samples, dt)
    space = ParamSpace(model_kind, cfg.bounds, cfg.fixed)

    def func(u):
        return problem.sse(space.from_unit(u))

    local_kw = dict(f_tol=cfg.f_tol, x_tol=cfg.x_tol, max_evals=cfg.max_evals)
    start = space.to_unit(cfg.initial)
    if cfg.solver == "multistart-simplex":
        res = multistart(func, space.unit_bounds(), initial=start, n_starts=cfg.n_starts,
                         seed=cfg.seed, n_jobs=cfg.n_jobs, restarts=cfg.restarts, **local_kw)
        x, fun, evals, converged, history = res.x, res.fun, res.evals, res.converged, res.history
        starts = [s.to_dict() for s in res.starts]
        for s in starts:
            s["x0"] = dict(zip(space.names, space.from_unit(s.pop("x0")).tolist()))
            s["x"] = dict(zip(space.names, space.from_unit(s["x"]).tolist()))
    else:
        ga = genetic_search(func, space.unit_bounds(), population=cfg.population,
                            generations=cfg.generations, seed=cfg.seed)
        loc = polish(func, ga.x, space.unit_bounds(), restarts=cfg.restarts, **local_kw)
        x, fun = (loc.x, loc.fun) if loc.fun <= ga.fun else (ga.x, ga.fun)
        evals, converged = ga.evals + loc.evals, loc.converged
        history = list(ga.history) + [min(ga.fun, h) for h in loc.history]
        starts = [{"index": 0, "x": dict(zip(space.names, space.from_unit(x).tolist())),
                   "fun": fun, "evals": evals, "converged": converged}]

    if not fun < SENTINEL:
        raise FitError("no start produced a usable simulation")
    params = space.params(x)
    objective_value = problem.sse(params)
    y = problem.simulate(params)
    metrics = evaluate(problem.measured, y, warmup=cfg.warmup_samples, mask=problem.mask)
    return FitResult(params=params, objective=objective_value, metrics=metrics, evals=evals,
                     converged=bool(converged), seed=cfg.seed, model_kind=model_kind,
                     solver=cfg.solver, starts=starts, config=cfg.to_dict(), history=history)
