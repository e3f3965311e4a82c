"""Compare the numba-compiled kernels with their pure-Python originals.

Times ``lti_simulate`` (state-space recurrence) and ``rk23_zoh`` (adaptive
reference integrator) on the synthetic thermal model, checks that both
backends give the same outputs, and prints a CSV table.

    python benchmarks/bench_backends.py --horizons 720,8760 --py-cap 8760

Pure Python is slow; horizons above ``--py-cap`` hours skip that backend.
"""
import argparse
import sys
import time

import numpy as np

from rcclimate import kernels
from rcclimate._accel import USE_NUMBA
from rcclimate.model import build_thermal_model
from rcclimate.simulate import HOUR, _synthetic_drivers, discretize_zoh, steady_state_x0
from rcclimate.synthetic import THERMAL_TRUTH


def best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(horizons, py_cap, repeats):
    model = build_thermal_model(THERMAL_TRUTH)
    dm = discretize_zoh(model, HOUR)
    rows = []
    for hours in horizons:
        u = np.ascontiguousarray(_synthetic_drivers(model, hours))
        x0 = steady_state_x0(model, u)
        no_states = np.empty((model.n_states, 0))

        def ss(fn):
            y = np.empty((1, hours))
            fn(dm.ad, dm.bd, dm.c, dm.d, u, x0, y, no_states)
            return y

        def rk(fn):
            y = np.empty((1, hours))
            fn(model.a, model.b, model.c, model.d, u, x0, HOUR, 1e-6, 1e-8, 10 ** 9, y, no_states)
            return y

        for name, wrap, kern in (("state-space", ss, kernels.lti_simulate),
                                 ("rk23", rk, kernels.rk23_zoh)):
            wrap(kern)  # compile / warm the cache
            t_jit, y_jit = best_of(lambda: wrap(kern), repeats)
            if hours <= py_cap:
                t_py, y_py = best_of(lambda: wrap(kern.py_func), 1)
                diff = float(np.max(np.abs(y_jit - y_py)))
            else:
                t_py, diff = None, None
            rows.append((hours, name, t_jit, t_py, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", default="720,8760,87600,876000")
    ap.add_argument("--py-cap", type=int, default=8760)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    if not USE_NUMBA:
        print("numba is disabled (RCCLIMATE_DISABLE_NUMBA); both columns time the same code",
              file=sys.stderr)
    horizons = [int(h) for h in args.horizons.split(",")]
    print("horizon_hours,kernel,numba_seconds,python_seconds,speedup,max_abs_diff")
    for hours, name, t_jit, t_py, diff in run(horizons, args.py_cap, args.repeats):
        if t_py is None:
            print(f"{hours},{name},{t_jit:.6f},skipped,,")
        else:
            print(f"{hours},{name},{t_jit:.6f},{t_py:.6f},{t_py / t_jit:.0f},{diff:.3g}")


if __name__ == "__main__":
    main()
