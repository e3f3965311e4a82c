"""Acceptance suite: one PASS/FAIL line per criterion, listed at the end of the pytest run.

Run alone with ``pytest tests/test_acceptance.py -v``. Criterion 5 fits a full
synthetic year several times and takes a minute or two.
"""
import json
import time

import numpy as np
import pytest

from rcclimate.cli import main as cli_main
from rcclimate.data_io import atomic_write_text, series_csv, write_climate_csv
from rcclimate.identify import NOMINAL, FitConfig, ParamSpace, Problem, default_bounds, fit
from rcclimate.metrics import goodness_of_fit, mae, mse
from rcclimate.model import build_hygric_model, build_thermal_model, params_class
from rcclimate.optimize import genetic_search, local_search
from rcclimate.simulate import HORIZONS, benchmark, discretize_zoh, simulate, simulate_discrete, \
    simulate_ode_reference
from rcclimate.synthetic import HYGRIC_TRUTH, HYGRIC_TRUTH_FIXED, THERMAL_TRUTH, make_climate, \
    measured_from

from conftest import random_hygric, random_thermal

FIT_BUDGET_S = 300.0


def scoped_bounds(kind):
    """Defaults narrowed to 1.5 decades around nominal, so random starts land in a physical region."""
    b = default_bounds(kind)
    for name in params_class(kind).scaled:
        if name == "c_i":
            continue
        if name.startswith("f_irr"):
            b[name] = (0.0, 20.0)
        elif NOMINAL[kind][name] > 0:
            b[name] = (NOMINAL[kind][name] * 10 ** -1.5, NOMINAL[kind][name] * 10 ** 1.5)
    return b


def random_initial(kind, bounds, seed, fixed=None):
    space = ParamSpace(kind, bounds, fixed)
    u = np.random.default_rng(seed).uniform(0, 1, space.dim)
    return dict(zip(space.names, space.from_unit(u).tolist()))


# -- 1 -----------------------------------------------------------------------
@pytest.mark.criterion(1)
def test_criterion_1_speed(criterion):
    model = build_thermal_model(THERMAL_TRUTH)
    rows = benchmark(model, list(HORIZONS.values()), ode_cap_hours=8760, repeats=3)
    ss = {h: s for h, i, s in rows if i == "state-space"}
    ode = {h: s for h, i, s in rows if i == "ode23"}
    hours = sorted(ss)
    t100 = ss[876_000]
    monotone = all(ss[a] <= ss[b] for a, b in zip(hours, hours[1:]))
    ratio = ode[8760] / ss[8760]
    ok = t100 < 1.0 and monotone and all(s is not None for s in ss.values()) and ratio >= 10
    detail = (f"100 y state-space {t100:.3f} s (< 1 s), horizons monotone={monotone}, "
              f"1 y ode23/state-space = {ratio:.0f}x (>= 10x)")
    criterion(1, "simulation speed", ok, detail)
    assert ok, detail


# -- 2 -----------------------------------------------------------------------
def _closed_form_error(model, x0, u, steps, dt=3600.0):
    """Max relative state error against x(t) = x_ss + V exp(L t) V^-1 (x0 - x_ss)."""
    lam, v = np.linalg.eig(model.a)
    vinv = np.linalg.inv(v)
    x_ss = -np.linalg.solve(model.a, model.b @ u)
    res = simulate_discrete(discretize_zoh(model, dt), np.tile(u[:, None], steps), x0,
                            keep_states=True)
    t = np.arange(steps) * dt
    exact = x_ss[:, None] + np.real(v @ (np.exp(np.outer(lam, t)) * (vinv @ (x0 - x_ss))[:, None]))
    return float(np.max(np.abs(res.states - exact) / np.abs(exact)))


@pytest.mark.criterion(2)
def test_criterion_2_discretization(criterion):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        p = random_thermal(rng)
        u = np.array([rng.uniform(-5, 25), *rng.uniform(0, 400, 4), p.t_fixed])
        x0 = rng.uniform(5, 20, 3)
        worst = max(worst, _closed_form_error(build_thermal_model(p), x0, u, 2000))
        h = random_hygric(rng)
        uh = np.array([rng.uniform(400, 1500), h.p_fixed])
        worst = max(worst, _closed_form_error(build_hygric_model(h), rng.uniform(500, 1500, 2), uh, 2000))

    clim = make_climate(720, seed=5)
    dev = {}
    for name, params, tol in (("thermal", THERMAL_TRUTH, 0.01), ("hygric", HYGRIC_TRUTH_FIXED, 0.1)):
        prob = Problem(name, clim, None)
        model = (build_thermal_model if name == "thermal" else build_hygric_model)(params)
        u = prob.inputs(params)
        a = simulate(model, u).y
        b = simulate_ode_reference(model, u).y
        dev[name] = (float(np.max(np.abs(a - b))), tol)
    ok = worst <= 1e-9 and all(d <= tol for d, tol in dev.values())
    detail = (f"closed form max rel err {worst:.1e} (<= 1e-9); 1-month vs RK2(3): "
              f"thermal {dev['thermal'][0]:.1e} degC (<= 0.01), hygric {dev['hygric'][0]:.1e} Pa (<= 0.1)")
    criterion(2, "discretization exactness", ok, detail)
    assert ok, detail


# -- 3 -----------------------------------------------------------------------
@pytest.mark.criterion(3)
def test_criterion_3_structure(criterion):
    rng = np.random.default_rng(3)
    eps = np.finfo(float).eps
    fails = {"stable": 0, "conservation": 0, "scaling": 0, "dc": 0}
    for _ in range(1000):
        p = random_thermal(rng)
        m = build_thermal_model(p)
        if not np.linalg.eigvals(m.a).real.max() < 0:
            fails["stable"] += 1
        balance = m.a.sum(axis=1) + m.b[:, [0, 5]].sum(axis=1)
        if np.any(np.abs(balance) > 8 * eps * np.abs(m.a).max(axis=1)):
            fails["conservation"] += 1
        k = 2.0 ** int(rng.integers(-20, 21))
        ms = build_thermal_model(p.scaled_by(k))
        if not (np.array_equal(m.a, ms.a) and np.array_equal(m.b, ms.b)):
            fails["scaling"] += 1
        dark = build_thermal_model(type(p).from_dict({**p.as_dict(), "f_irr_n": 0.0, "f_irr_e": 0.0,
                                                       "f_irr_s": 0.0, "f_irr_w": 0.0}))
        c = float(rng.uniform(-10, 30))
        x = dark.steady_state(np.array([c, *rng.uniform(0, 500, 4), c]))
        if np.max(np.abs(x - c)) > 1e-9 * max(1.0, abs(c)):
            fails["dc"] += 1
    ok = not any(fails.values())
    detail = "1000 draws, failures " + ", ".join(f"{k}={v}" for k, v in fails.items())
    criterion(3, "model structure invariants", ok, detail)
    assert ok, detail


# -- 4 -----------------------------------------------------------------------
@pytest.mark.criterion(4)
def test_criterion_4_metrics(criterion):
    y = np.linspace(0, 1, 11)
    hand = [
        mse([1, 2], [1, 2]) == 0.0, mse([1, 2, 3], [1, 1, 1]) == 5 / 3, mse(y, y + 0.5) == 0.25,
        mae([1, 2], [1, 2]) == 0.0, mae([1, 2, 3], [1, 1, 1]) == 1.0, mae(y, y + 0.5) == 0.5,
        goodness_of_fit([1, 5], [1, 5]) == 100.0,
        goodness_of_fit([2, 7, 1, 8], [4.5] * 4) == 0.0,
        goodness_of_fit([0, 2], [1, 1]) == 0.0,
    ]
    rng = np.random.default_rng(4)
    prop_fail = 0
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        ym = rng.normal(0, rng.uniform(0.1, 100), n)
        ys = ym + rng.normal(0, rng.uniform(0.01, 50), n)
        err = np.abs(ym - ys)
        chain = mae(ym, ys) <= np.sqrt(mse(ym, ys)) * (1 + 1e-12) <= err.max() * (1 + 1e-12)
        a, b = rng.uniform(0.1, 10) * rng.choice([-1, 1]), rng.uniform(-100, 100)
        affine = abs(goodness_of_fit(a * ym + b, a * ys + b) - goodness_of_fit(ym, ys)) <= 1e-8
        ident = goodness_of_fit(ym, ym) == 100.0
        prop_fail += not (chain and affine and ident)
    ok = all(hand) and prop_fail == 0
    detail = f"hand examples {sum(hand)}/{len(hand)} exact, property failures {prop_fail}/1000"
    criterion(4, "metrics", ok, detail)
    assert ok, detail


# -- 5 -----------------------------------------------------------------------
def _timed_fit(cfg, clim, meas, kind):
    t0 = time.perf_counter()
    res = fit(cfg, clim, meas, kind)
    return res, time.perf_counter() - t0


@pytest.mark.criterion(5)
@pytest.mark.slow
def test_criterion_5_round_trip(criterion):
    clim = make_climate(8760, seed=0)
    tb = scoped_bounds("thermal")
    tcfg = FitConfig(bounds=tb, initial=random_initial("thermal", tb, 50), n_starts=4, seed=5,
                     n_jobs=4)
    clean, t_clean = _timed_fit(tcfg, clim, measured_from(THERMAL_TRUTH, clim), "thermal")
    noisy, t_noisy = _timed_fit(tcfg, clim, measured_from(THERMAL_TRUTH, clim, noise=0.5, seed=7),
                                "thermal")

    hb = scoped_bounds("hygric")
    base_fixed = {"g_f": 0.0, "p_fixed": 0.0}
    hcfg = FitConfig(bounds=hb, initial=random_initial("hygric", hb, 51, base_fixed), n_starts=4,
                     seed=6, fixed=base_fixed, n_jobs=4)
    hyg, t_hyg = _timed_fit(hcfg, clim, measured_from(HYGRIC_TRUTH, clim), "hygric")

    src = measured_from(HYGRIC_TRUTH_FIXED, clim, noise=10.0, seed=8)
    without, t_wo = _timed_fit(hcfg, clim, src, "hygric")
    fcfg = FitConfig(bounds=hb, initial=random_initial("hygric", hb, 52), n_starts=4, seed=6, n_jobs=4)
    with_node, t_w = _timed_fit(fcfg, clim, src, "hygric")

    times = [t_clean, t_noisy, t_hyg, t_wo, t_w]
    f = [r.metrics.fit_percent for r in (clean, noisy, hyg, without, with_node)]
    ok = (f[0] >= 99.0 and 80.0 <= f[1] <= 95.0 and f[2] >= 97.0
          and with_node.objective < without.objective and max(times) < FIT_BUDGET_S)
    detail = (f"thermal noiseless FIT {f[0]:.2f}% (>= 99), sigma=0.5 FIT {f[1]:.2f}% (80-95), "
              f"hygric noiseless FIT {f[2]:.2f}% (>= 97), fixed node SSE {with_node.objective:.4g} "
              f"< {without.objective:.4g} (FIT {f[3]:.1f} -> {f[4]:.1f}), slowest fit {max(times):.0f} s")
    criterion(5, "inverse modelling round trip", ok, detail)
    assert ok, detail


# -- 6 -----------------------------------------------------------------------
@pytest.mark.criterion(6)
def test_criterion_6_determinism(criterion, tmp_path):
    clim = make_climate(3000, seed=6)
    write_climate_csv(tmp_path / "climate.csv", clim)
    meas = measured_from(THERMAL_TRUTH, clim, noise=0.2, seed=3)
    atomic_write_text(tmp_path / "t_i.csv", series_csv(clim.start, 3600, {"t_i": meas.values}))
    cfg = {"model_kind": "thermal", "climate": "climate.csv", "measurements": "t_i.csv",
           "fit": {"n_starts": 3, "max_evals": 800, "restarts": 1, "n_jobs": 3}}
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    blobs = []
    for run in ("a", "b"):
        code = cli_main(["fit", "--config", str(tmp_path / "run.json"), "--seed", "42",
                         "--out", str(tmp_path / run), "--quiet"])
        assert code == 0
        d = json.loads((tmp_path / run / "fit_result.json").read_text())
        d.pop("timing")
        blobs.append((json.dumps(d, sort_keys=True), (tmp_path / run / "fitted.csv").read_bytes(),
                      (tmp_path / run / "residuals.csv").read_bytes()))
    same_cli = blobs[0] == blobs[1]

    base = FitConfig(bounds=scoped_bounds("thermal"), n_starts=4, max_evals=800, restarts=1, seed=9)
    seq = fit(base, clim, meas, "thermal")
    par = fit(FitConfig(**{**base.__dict__, "n_jobs": 4}), clim, meas, "thermal")
    same_ms = (np.array_equal(seq.params.to_vector(), par.params.to_vector())
               and seq.objective == par.objective and seq.starts == par.starts)
    ok = same_cli and same_ms
    detail = f"cmd_fit repeat identical={same_cli}, multistart parallel==sequential={same_ms}"
    criterion(6, "determinism", ok, detail)
    assert ok, detail


# -- 7 -----------------------------------------------------------------------
@pytest.mark.criterion(7)
def test_criterion_7_optimizer(criterion):
    target = np.array([0.3, -1.2, 2.5])
    q = local_search(lambda x: float(np.sum((x - target) ** 2)), [4.0, 4.0, -4.0], [(-5, 5)] * 3,
                     x_tol=1e-7, f_tol=1e-14, max_evals=5000)
    q_ok = bool(np.max(np.abs(q.x - target)) <= 1e-7)

    def rosen(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    g = np.linspace(-2, 2, 401)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    grid = (1 - gx) ** 2 + 100 * (gy - gx ** 2) ** 2
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    r = local_search(rosen, [-1.2, 1.0], [(-5, 5)] * 2, x_tol=1e-10, f_tol=1e-14, max_evals=2000)
    r_ok = r.fun < 1e-6 and r.evals <= 2000 and (g[i], g[j]) == (1.0, 1.0)

    def rastrigin(x):
        return 20 + float(np.sum(x * x - 10 * np.cos(2 * np.pi * x)))

    g = np.linspace(-5.12, 5.12, 1025)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    grid = 20 + gx ** 2 - 10 * np.cos(2 * np.pi * gx) + gy ** 2 - 10 * np.cos(2 * np.pi * gy)
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    best = np.array([g[i], g[j]])
    hits = sum(bool(np.all(np.abs(genetic_search(rastrigin, [(-5.12, 5.12)] * 2, population=40,
                                                 generations=100, seed=s).x - best) < 0.5))
               for s in range(10))
    ok = q_ok and r_ok and hits >= 8
    detail = (f"quadratic within x_tol={q_ok} ({q.evals} evals), Rosenbrock f={r.fun:.1e} in "
              f"{r.evals} evals (<= 2000), Rastrigin basin {hits}/10 seeds (>= 8)")
    criterion(7, "optimizer sanity", ok, detail)
    assert ok, detail
