"""Lumped-capacitance thermal and hygric models as continuous LTI systems.

Two fixed topologies are supported:

* thermal: envelope (T_w), indoor air (T_i) and interior mass (T_int) nodes,
  driven by outdoor temperature, four vertical-surface irradiations and a
  fixed-temperature node reached from the indoor air;
* hygric: envelope (P_w) and indoor air (P_i) vapour-pressure nodes, driven by
  outdoor vapour pressure and an optional fixed-pressure node.

Only the indoor-air node is observed. The input/output map is invariant under
a uniform rescaling of all conductances, capacitances and solar factors, so
from data alone only their ratios are identifiable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THERMAL_STATES = ("T_w", "T_i", "T_int")
THERMAL_INPUTS = ("T_e", "I_N", "I_E", "I_S", "I_W", "T_f")
HYGRIC_STATES = ("P_w", "P_i")
HYGRIC_INPUTS = ("P_e", "P_f")


class ParameterError(ValueError):
    """Raised when a parameter set violates its physical bounds."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ThermalParams:
    """Parameters of the three-node thermal network.

    Conductances in W/K, capacitances in J/K, ``f_irr`` as area-equivalents
    [m²] for the N, E, S, W irradiation inputs, ``t_fixed`` in °C.
    """

    g_w: float
    g_i: float
    g_int: float
    g_f: float
    g_fast: float
    c_w: float
    c_i: float
    c_int: float
    f_irr: tuple = (0.0, 0.0, 0.0, 0.0)
    t_fixed: float = 10.0

    kind = "thermal"
    names = (
        "g_w", "g_i", "g_int", "g_f", "g_fast", "c_w", "c_i", "c_int",
        "f_irr_n", "f_irr_e", "f_irr_s", "f_irr_w", "t_fixed",
    )
    # parameters that take part in the uniform-scaling symmetry
    scaled = names[:12]

    def __post_init__(self):
        object.__setattr__(self, "f_irr", tuple(float(v) for v in self.f_irr))

    def to_vector(self) -> np.ndarray:
        return np.array(
            [self.g_w, self.g_i, self.g_int, self.g_f, self.g_fast,
             self.c_w, self.c_i, self.c_int, *self.f_irr, self.t_fixed],
            dtype=float,
        )

    @classmethod
    def from_vector(cls, vec) -> "ThermalParams":
        v = [float(x) for x in vec]
        if len(v) != len(cls.names):
            raise ValueError(f"expected {len(cls.names)} thermal parameters, got {len(v)}")
        return cls(*v[:8], f_irr=tuple(v[8:12]), t_fixed=v[12])

    def scaled_by(self, k: float) -> "ThermalParams":
        return ThermalParams(
            self.g_w * k, self.g_i * k, self.g_int * k, self.g_f * k, self.g_fast * k,
            self.c_w * k, self.c_i * k, self.c_int * k,
            f_irr=tuple(f * k for f in self.f_irr), t_fixed=self.t_fixed,
        )

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.to_vector().tolist()))

    @classmethod
    def from_dict(cls, d: dict) -> "ThermalParams":
        d = dict(d)
        if "f_irr" in d:
            f = list(d.pop("f_irr"))
            d.update(f_irr_n=f[0], f_irr_e=f[1], f_irr_s=f[2], f_irr_w=f[3])
        missing = [n for n in cls.names if n not in d]
        if missing:
            raise ValueError(f"missing thermal parameters: {', '.join(missing)}")
        return cls.from_vector([d[n] for n in cls.names])


@dataclass(frozen=True)
class HygricParams:
    """Parameters of the two-node hygric network (abstract consistent units).

    ``g_f = 0`` disables the fixed vapour-pressure node.
    """

    g_w: float
    g_i: float
    g_fast: float
    c_w: float
    c_i: float
    g_f: float = 0.0
    p_fixed: float = 0.0

    kind = "hygric"
    names = ("g_w", "g_i", "g_fast", "g_f", "c_w", "c_i", "p_fixed")
    scaled = names[:6]

    def to_vector(self) -> np.ndarray:
        return np.array([self.g_w, self.g_i, self.g_fast, self.g_f,
                         self.c_w, self.c_i, self.p_fixed], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "HygricParams":
        v = [float(x) for x in vec]
        if len(v) != len(cls.names):
            raise ValueError(f"expected {len(cls.names)} hygric parameters, got {len(v)}")
        g_w, g_i, g_fast, g_f, c_w, c_i, p_fixed = v
        return cls(g_w=g_w, g_i=g_i, g_fast=g_fast, c_w=c_w, c_i=c_i, g_f=g_f, p_fixed=p_fixed)

    def scaled_by(self, k: float) -> "HygricParams":
        return HygricParams(self.g_w * k, self.g_i * k, self.g_fast * k,
                            self.c_w * k, self.c_i * k, g_f=self.g_f * k, p_fixed=self.p_fixed)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.to_vector().tolist()))

    @classmethod
    def from_dict(cls, d: dict) -> "HygricParams":
        d = dict(d)
        d.setdefault("g_f", 0.0)
        d.setdefault("p_fixed", 0.0)
        missing = [n for n in cls.names if n not in d]
        if missing:
            raise ValueError(f"missing hygric parameters: {', '.join(missing)}")
        return cls.from_vector([d[n] for n in cls.names])


@dataclass
class StateSpaceModel:
    """Continuous-time system ``dx/dt = a x + b u``, ``y = c x + d u``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    state_labels: tuple = ()
    input_labels: tuple = ()
    output_labels: tuple = ()

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.c = np.atleast_2d(np.asarray(self.c, dtype=float))
        self.d = np.atleast_2d(np.asarray(self.d, dtype=float))
        n, m, p = self.n_states, self.n_inputs, self.n_outputs
        if self.a.shape != (n, n):
            raise ValueError(f"a must be square, got {self.a.shape}")
        if self.b.shape[0] != n:
            raise ValueError(f"b has {self.b.shape[0]} rows, expected {n}")
        if self.c.shape[1] != n:
            raise ValueError(f"c has {self.c.shape[1]} columns, expected {n}")
        if self.d.shape != (p, m):
            raise ValueError(f"d must be {(p, m)}, got {self.d.shape}")
        for name in ("a", "b", "c", "d"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")
        for labels, size, what in ((self.state_labels, n, "state"),
                                   (self.input_labels, m, "input"),
                                   (self.output_labels, p, "output")):
            if labels and len(labels) != size:
                raise ValueError(f"{len(labels)} {what} labels for {size} {what}s")

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def steady_state(self, u) -> np.ndarray:
        """State solving ``0 = a x + b u`` for a constant input vector."""
        u = np.asarray(u, dtype=float).reshape(self.n_inputs)
        return np.linalg.solve(self.a, -self.b @ u)

    def is_stable(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.a).real < 0.0))


_STRICT = {
    "thermal": ("g_w", "g_i", "g_int", "g_f", "g_fast", "c_w", "c_i", "c_int"),
    "hygric": ("g_w", "g_i", "g_fast", "c_w", "c_i"),
}
_NONNEG = {
    "thermal": ("f_irr_n", "f_irr_e", "f_irr_s", "f_irr_w"),
    "hygric": ("g_f", "p_fixed"),
}


def validate_params(params) -> list[str]:
    """Return a list of bound violations; empty when ``params`` is usable."""
    if not isinstance(params, (ThermalParams, HygricParams)):
        return [f"unsupported parameter type {type(params).__name__}"]
    kind = params.kind
    if kind == "thermal" and len(params.f_irr) != 4:
        return [f"f_irr must have 4 entries, got {len(params.f_irr)}"]
    out = []
    for name, value in zip(params.names, params.to_vector()):
        if not math.isfinite(value):
            out.append(f"{name} must be finite")
        elif name in _STRICT[kind] and not value > 0.0:
            out.append(f"{name} must be > 0")
        elif name in _NONNEG[kind] and not value >= 0.0:
            out.append(f"{name} must be >= 0")
    return out


def _check(params):
    problems = validate_params(params)
    if problems:
        raise ParameterError(problems)


def build_thermal_model(params: ThermalParams) -> StateSpaceModel:
    """Three-state thermal model; inputs [T_e, I_N, I_E, I_S, I_W, T_f], output T_i.

    All solar gain enters the indoor-air node (third row of ``b`` is zero).
    """
    _check(params)
    p = params
    a = np.array([
        [(-p.g_w - p.g_i) / p.c_w, p.g_i / p.c_w, 0.0],
        [p.g_i / p.c_i, (-p.g_i - p.g_f - p.g_int - p.g_fast) / p.c_i, p.g_int / p.c_i],
        [0.0, p.g_int / p.c_int, -p.g_int / p.c_int],
    ])
    b = np.zeros((3, 6))
    b[0, 0] = p.g_w / p.c_w
    b[1, 0] = p.g_fast / p.c_i
    b[1, 1:5] = [f / p.c_i for f in p.f_irr]
    b[1, 5] = p.g_f / p.c_i
    c = np.array([[0.0, 1.0, 0.0]])
    return StateSpaceModel(a, b, c, np.zeros((1, 6)),
                           THERMAL_STATES, THERMAL_INPUTS, ("T_i",))


def build_hygric_model(params: HygricParams) -> StateSpaceModel:
    """Two-state hygric model; inputs [P_e, P_f], output P_i."""
    _check(params)
    p = params
    a = np.array([
        [(-p.g_w - p.g_i) / p.c_w, p.g_i / p.c_w],
        [p.g_i / p.c_i, (-p.g_i - p.g_fast - p.g_f) / p.c_i],
    ])
    b = np.array([
        [p.g_w / p.c_w, 0.0],
        [p.g_fast / p.c_i, p.g_f / p.c_i],
    ])
    return StateSpaceModel(a, b, np.array([[0.0, 1.0]]), np.zeros((1, 2)),
                           HYGRIC_STATES, HYGRIC_INPUTS, ("P_i",))


def build_model(params) -> StateSpaceModel:
    if isinstance(params, ThermalParams):
        return build_thermal_model(params)
    if isinstance(params, HygricParams):
        return build_hygric_model(params)
    raise TypeError(f"unsupported parameter type {type(params).__name__}")


def params_class(kind: str):
    try:
        return {"thermal": ThermalParams, "hygric": HygricParams}[kind]
    except KeyError:
        raise ValueError(f"model_kind must be 'thermal' or 'hygric', got {kind!r}") from None
