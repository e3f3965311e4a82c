"""Zero-order-hold discretisation, fast simulation and an adaptive ODE reference."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .expm import matrix_exponential
from .model import StateSpaceModel

HOUR = 3600.0


class IntegrationError(RuntimeError):
    """The adaptive reference integrator could not complete."""

    def __init__(self, message, t_fail):
        super().__init__(message)
        self.t_fail = t_fail


@dataclass
class DiscreteModel:
    ad: np.ndarray
    bd: np.ndarray
    c: np.ndarray
    d: np.ndarray
    dt: float

    @property
    def n_states(self) -> int:
        return self.ad.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.bd.shape[1]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.ad))))


@dataclass
class SimulationResult:
    times: np.ndarray
    outputs: np.ndarray
    states: np.ndarray | None = None
    final_state: np.ndarray | None = None
    stats: dict | None = None

    @property
    def y(self) -> np.ndarray:
        """First output as a 1-D array."""
        return self.outputs[0]


def discretize_zoh(model: StateSpaceModel, dt: float = HOUR) -> DiscreteModel:
    """Exact discretisation for inputs held constant over each step.

    ``bd`` comes from the upper-right block of ``exp([[A, B], [0, 0]] dt)``,
    which needs no inverse of ``A``.
    """
    dt = float(dt)
    if not dt > 0.0 or not np.isfinite(dt):
        raise ValueError(f"dt must be > 0, got {dt}")
    n, m = model.n_states, model.n_inputs
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = model.a * dt
    aug[:n, n:] = model.b * dt
    e = matrix_exponential(aug)
    return DiscreteModel(
        ad=np.ascontiguousarray(e[:n, :n]),
        bd=np.ascontiguousarray(e[:n, n:]),
        c=model.c.copy(),
        d=model.d.copy(),
        dt=dt,
    )


def _prepare(inputs, n_inputs, x0, n_states):
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1:
        u = u.reshape(1, -1)
    if u.ndim != 2 or u.shape[0] != n_inputs:
        raise ValueError(f"inputs must have shape ({n_inputs}, N), got {u.shape}")
    if u.shape[1] < 1:
        raise ValueError("inputs must contain at least one sample")
    if not np.all(np.isfinite(u)):
        raise ValueError("inputs contain non-finite values")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (n_states,):
        raise ValueError(f"x0 must have {n_states} entries, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 contains non-finite values")
    return np.ascontiguousarray(u), x


def steady_state_x0(model: StateSpaceModel, inputs) -> np.ndarray:
    """Equilibrium state for the first input sample held forever."""
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1:
        u = u.reshape(1, -1)
    return model.steady_state(u[:, 0])


def simulate_discrete(dmodel: DiscreteModel, inputs, x0, keep_states=False) -> SimulationResult:
    u, x = _prepare(inputs, dmodel.n_inputs, x0, dmodel.n_states)
    nsamp = u.shape[1]
    y = np.empty((dmodel.c.shape[0], nsamp))
    states = np.empty((dmodel.n_states, nsamp if keep_states else 0))
    xf = kernels.lti_simulate(dmodel.ad, dmodel.bd, dmodel.c, dmodel.d, u, x, y, states)
    return SimulationResult(
        times=np.arange(nsamp) * dmodel.dt,
        outputs=y,
        states=states if keep_states else None,
        final_state=xf,
    )


def simulate(model: StateSpaceModel, inputs, x0=None, dt=HOUR, keep_states=False) -> SimulationResult:
    """Discretise and simulate; ``x0`` defaults to the steady state of the first sample."""
    if x0 is None:
        x0 = steady_state_x0(model, inputs)
    return simulate_discrete(discretize_zoh(model, dt), inputs, x0, keep_states=keep_states)


def simulate_ode_reference(model: StateSpaceModel, inputs, x0=None, rtol=1e-6, atol=1e-8,
                           dt=HOUR, max_steps=50_000_000, keep_states=False) -> SimulationResult:
    """Integrate the continuous model with an adaptive Bogacki-Shampine pair.

    Inputs are held over each interval of length ``dt`` so the result is
    directly comparable with :func:`simulate_discrete`.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be > 0")
    if x0 is None:
        x0 = steady_state_x0(model, inputs)
    u, x = _prepare(inputs, model.n_inputs, x0, model.n_states)
    nsamp = u.shape[1]
    y = np.empty((model.n_outputs, nsamp))
    states = np.empty((model.n_states, nsamp if keep_states else 0))
    status, t_fail, n_acc, n_rej = kernels.rk23_zoh(
        model.a, model.b, model.c, model.d, u, x, float(dt), float(rtol), float(atol),
        int(max_steps), y, states)
    if status == kernels.RK_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t = {t_fail:.6g} s", t_fail)
    if status == kernels.RK_MAXSTEPS:
        raise IntegrationError(f"step budget of {max_steps} exhausted at t = {t_fail:.6g} s", t_fail)
    return SimulationResult(
        times=np.arange(nsamp) * float(dt),
        outputs=y,
        states=states if keep_states else None,
        stats={"accepted": int(n_acc), "rejected": int(n_rej)},
    )


HORIZONS = {
    "1 month": 720,
    "1 year": 8760,
    "10 years": 87_600,
    "100 years": 876_000,
}


def _synthetic_drivers(model: StateSpaceModel, hours: int, seed: int = 0) -> np.ndarray:
    # seasonal + daily outdoor cycle and a noon-peaked irradiation pattern
    rng = np.random.default_rng(seed)
    t = np.arange(hours, dtype=float)
    u = np.zeros((model.n_inputs, hours))
    u[0] = 10.0 + 8.0 * np.sin(2 * np.pi * t / 8760.0) + 4.0 * np.sin(2 * np.pi * t / 24.0) \
        + rng.normal(0.0, 1.0, hours)
    if model.n_inputs == 6:
        sun = np.clip(np.sin(2 * np.pi * (t - 6.0) / 24.0), 0.0, None)
        u[1:5] = sun * np.array([[50.0], [200.0], [400.0], [200.0]])
        u[5] = 12.0
    else:
        u[-1] = u[0]
    return u


def benchmark(model: StateSpaceModel, horizons=None, ode_cap_hours=8760, repeats=3,
              rtol=1e-6, atol=1e-8, seed=0):
    """Time the discrete simulator against the adaptive reference.

    Returns a list of ``(horizon_hours, integrator, wall_seconds)`` rows;
    ``wall_seconds`` is ``None`` for reference runs skipped above
    ``ode_cap_hours``. Each figure is the best of ``repeats`` runs, after a
    warm-up call that triggers compilation.
    """
    if horizons is None:
        horizons = list(HORIZONS.values())
    horizons = [int(h) for h in horizons]
    if not horizons:
        raise ValueError("horizons must be non-empty")
    warm = _synthetic_drivers(model, 48, seed)
    simulate(model, warm)
    simulate_ode_reference(model, warm, rtol=rtol, atol=atol)

    rows = []
    for hours in horizons:
        u = _synthetic_drivers(model, hours, seed)
        x0 = steady_state_x0(model, u)
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            simulate(model, u, x0)
            best = min(best, time.perf_counter() - t0)
        rows.append((hours, "state-space", best))
        if hours > ode_cap_hours:
            rows.append((hours, "ode23", None))
            continue
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            simulate_ode_reference(model, u, x0, rtol=rtol, atol=atol)
            best = min(best, time.perf_counter() - t0)
        rows.append((hours, "ode23", best))
    return rows
