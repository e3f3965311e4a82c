"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure, 4 identification found no usable start.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .data_io import (
    DataError,
    _read_table,
    _to_grid,
    align,
    atomic_write_text,
    load_climate_csv,
    load_measurements_csv,
    measurement_columns,
    resample_hourly,
    rh_to_vapour_pressure,
    series_csv,
    vapour_pressure_to_rh,
)
from .identify import NOMINAL, FitConfig, FitError, Problem, fit
from .metrics import DEFAULT_WARMUP, UndefinedFitError, evaluate
from .model import (
    ParameterError,
    ThermalParams,
    build_model,
    build_thermal_model,
    params_class,
    validate_params,
)
from .simulate import HORIZONS, IntegrationError, benchmark
from .synthetic import THERMAL_TRUTH

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_config(path, seed=None) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(EXIT_CONFIG, "config must be a JSON object")
    base = path.resolve().parent
    for key in ("climate", "measurements", "params", "output"):
        if key in cfg and cfg[key] is not None:
            p = Path(cfg[key])
            cfg[key] = str(p if p.is_absolute() else base / p)
    kind = cfg.get("model_kind", "thermal")
    if kind not in ("thermal", "hygric"):
        raise CliError(EXIT_CONFIG, f"model_kind must be 'thermal' or 'hygric', got {kind!r}")
    cfg["model_kind"] = kind
    sim = dict(cfg.get("sim") or {})
    sim.setdefault("dt", 3600.0)
    sim.setdefault("x0", "steady")
    sim.setdefault("warmup", DEFAULT_WARMUP)
    try:
        sim["dt"] = float(sim["dt"])
    except (TypeError, ValueError):
        raise CliError(EXIT_CONFIG, "sim.dt must be a number") from None
    if not sim["dt"] > 0:
        raise CliError(EXIT_CONFIG, f"sim.dt must be > 0, got {sim['dt']}")
    if not isinstance(sim["warmup"], int) or sim["warmup"] < 0:
        raise CliError(EXIT_CONFIG, "sim.warmup must be a non-negative integer")
    cfg["sim"] = sim
    fit_cfg = dict(cfg.get("fit") or {})
    if seed is not None:
        fit_cfg["seed"] = int(seed)
    fit_cfg.setdefault("warmup_samples", sim["warmup"])
    cfg["fit"] = fit_cfg
    cfg["seed"] = fit_cfg.get("seed", 0)
    return cfg


def provenance(cfg: dict) -> dict:
    inputs = {}
    for key in ("climate", "measurements", "params"):
        if cfg.get(key) and Path(cfg[key]).is_file():
            inputs[key] = _sha256_file(cfg[key])
    echo = {k: v for k, v in cfg.items() if k != "output"}
    return {
        "tool": "rcclimate",
        "version": __version__,
        "seed": cfg.get("seed"),
        "config_hash": hashlib.sha256(_canonical(echo).encode()).hexdigest(),
        "input_hashes": inputs,
    }


def _require(cfg, key):
    if not cfg.get(key):
        raise CliError(EXIT_CONFIG, f"config is missing '{key}'")
    return cfg[key]


def _load_climate(cfg):
    path = _require(cfg, "climate")
    try:
        return load_climate_csv(path)
    except FileNotFoundError:
        raise CliError(EXIT_DATA, f"climate file not found: {path}") from None


def load_measured(path, kind):
    """Indoor series for ``kind`` on an hourly grid; RH is converted to Pa for hygric fits."""
    try:
        present = measurement_columns(path)
    except FileNotFoundError:
        raise CliError(EXIT_DATA, f"measurement file not found: {path}") from None
    if kind == "thermal":
        if "t_i" not in present:
            raise CliError(EXIT_DATA, f"{path}: thermal fit needs a t_i column")
        return resample_hourly(load_measurements_csv(path, "t_i"))
    if "p_i" in present:
        return resample_hourly(load_measurements_csv(path, "p_i"))
    if "rh_i" not in present:
        raise CliError(EXIT_DATA, f"{path}: hygric fit needs a p_i or rh_i column")
    if "t_i" not in present:
        raise CliError(EXIT_DATA, f"{path}: rh_i given without t_i; vapour pressure "
                                  "cannot be derived without the indoor temperature")
    rh = load_measurements_csv(path, "rh_i")
    t = load_measurements_csv(path, "t_i")
    p = rh_to_vapour_pressure(np.nan_to_num(t.values, nan=0.0), np.nan_to_num(rh.values, nan=0.0))
    p = np.where(np.isnan(rh.values) | np.isnan(t.values), np.nan, p)
    rh.values, rh.unit = np.asarray(p, dtype=float), "Pa"
    return resample_hourly(rh)


def _load_params(path, kind):
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"parameter file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"parameter file is not valid JSON: {exc}") from None
    if isinstance(raw, dict) and "params" in raw:
        raw = raw["params"]
    try:
        params = params_class(kind).from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"bad parameter file: {exc}") from None
    problems = validate_params(params)
    if problems:
        raise CliError(EXIT_CONFIG, "invalid parameters: " + "; ".join(problems))
    return params


def _x0(sim_cfg, model, u):
    x0 = sim_cfg.get("x0", "steady")
    if x0 == "steady":
        return model.steady_state(u[:, 0])
    arr = np.asarray(x0, dtype=float).reshape(-1)
    if arr.shape != (model.n_states,):
        raise CliError(EXIT_CONFIG, f"sim.x0 must be 'steady' or {model.n_states} numbers")
    return arr


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.seed)
    kind = cfg["model_kind"]
    params_path = args.params or cfg.get("params")
    if not params_path:
        raise CliError(EXIT_CONFIG, "no parameter file given (--params or config 'params')")
    params = _load_params(params_path, kind)
    cfg["params"] = str(params_path)
    climate = _load_climate(cfg)
    problem = Problem(kind, climate, None, dt=cfg["sim"]["dt"])
    model = build_model(params)
    u = problem.inputs(params)
    y = problem.simulate(params, x0=_x0(cfg["sim"], model, u))
    if not np.all(np.isfinite(y)):
        raise CliError(EXIT_NUMERIC, "simulation produced non-finite values")
    out = Path(args.out or cfg.get("output") or ".")
    label = model.output_labels[0]
    csv_text = series_csv(climate.start, climate.step, {label: y})
    run = {"command": "simulate", "provenance": provenance(cfg), "rows": int(y.size),
           "output": label}
    atomic_write_text(out / "simulated.csv", csv_text)
    atomic_write_text(out / "simulate.json", json.dumps(run, indent=2, sort_keys=True) + "\n")
    _say(args, f"wrote {y.size} rows to {out / 'simulated.csv'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.config, args.seed)
    kind = cfg["model_kind"]
    try:
        fit_cfg = FitConfig.from_dict(cfg["fit"])
        fit_cfg.resolved(kind)
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"bad fit config: {exc}") from None
    climate = _load_climate(cfg)
    measured = load_measured(_require(cfg, "measurements"), kind)
    climate, measured = align(climate, measured)
    t0 = time.perf_counter()
    try:
        result = fit(fit_cfg, climate, measured, kind, dt=cfg["sim"]["dt"])
    except FitError as exc:
        raise CliError(EXIT_INFEASIBLE, str(exc)) from None
    wall = time.perf_counter() - t0

    problem = Problem(kind, climate, measured, fit_cfg.warmup_samples, cfg["sim"]["dt"])
    y = problem.simulate(result.params)
    report = result.to_dict()
    report["provenance"] = provenance(cfg)
    report["config_echo"] = {k: v for k, v in cfg.items() if k != "output"}
    report["timing"] = {"wall_seconds": wall, "backend": backend_name()}
    out = Path(args.out or cfg.get("output") or ".")
    label = "T_i" if kind == "thermal" else "P_i"
    fitted = series_csv(climate.start, climate.step, {f"{label}_measured": measured.values,
                                                      f"{label}_simulated": y})
    resid = series_csv(climate.start, climate.step, {"residual": measured.values - y})
    atomic_write_text(out / "fit_result.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    atomic_write_text(out / "fitted.csv", fitted)
    atomic_write_text(out / "residuals.csv", resid)
    m = result.metrics
    _say(args, f"{kind} fit: MSE={m.mse:.6g} MAE={m.mae:.6g} FIT={m.fit_percent:.2f}% "
               f"({result.evals} evaluations)")
    return EXIT_OK


def cmd_bench(args) -> int:
    horizons = [int(h) for h in args.horizons.split(",")] if args.horizons else list(HORIZONS.values())
    params = THERMAL_TRUTH if args.model == "synthetic" else ThermalParams.from_dict(NOMINAL["thermal"])
    model = build_thermal_model(params)
    rows = benchmark(model, horizons, ode_cap_hours=args.ode_cap, repeats=args.repeats)
    lines = ["horizon_hours,integrator,wall_seconds"]
    for hours, integrator, secs in rows:
        lines.append(f"{hours},{integrator},{'skipped' if secs is None else f'{secs:.6f}'}")
    text = "\n".join(lines) + "\n"
    ss = {h: s for h, i, s in rows if i == "state-space"}
    longest = max(ss)
    passed = longest >= 876_000 and ss[longest] < 1.0
    out = Path(args.out) if args.out else None
    if out:
        atomic_write_text(out / "bench.csv", text)
        summary = {"backend": backend_name(), "under_one_second_100y": passed,
                   "rows": [list(r) for r in rows]}
        atomic_write_text(out / "bench.json", json.dumps(summary, indent=2) + "\n")
    sys.stdout.write(text)
    _say(args, f"# backend={backend_name()} state-space 100 years < 1 s: "
               f"{'PASS' if passed else 'FAIL' if longest >= 876_000 else 'not run'}")
    return EXIT_OK


def _read_series_file(path, column):
    """First value column (or ``column``) of a timestamped CSV."""
    try:
        with Path(path).open(newline="", encoding="utf-8-sig") as fh:
            header = next(csv.reader(fh), [])
    except FileNotFoundError:
        raise CliError(EXIT_DATA, f"file not found: {path}") from None
    names = [h.split("[")[0].strip() for h in header]
    if "timestamp" not in names:
        raise CliError(EXIT_DATA, f"{path}: no timestamp column")
    candidates = [n for n in names if n != "timestamp"]
    if column:
        if column not in names:
            raise CliError(EXIT_DATA, f"{path}: column absent: {column}")
        name = column
    elif candidates:
        name = candidates[0]
    else:
        raise CliError(EXIT_DATA, f"{path}: no value column")
    times, cols, _ = _read_table(path, (name,))
    start, step, grid = _to_grid(times, cols, path)
    return start, step, grid[name]


def cmd_metrics(args) -> int:
    s1, step1, ym = _read_series_file(args.measured, args.column)
    s2, step2, ys = _read_series_file(args.simulated, args.sim_column)
    if s1 != s2 or step1 != step2 or ym.size != ys.size:
        raise CliError(EXIT_DATA, "measured and simulated series are not aligned "
                                  "(start, step and length must match)")
    try:
        m = evaluate(ym, ys, warmup=args.warmup)
    except UndefinedFitError as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    text = json.dumps(m.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(Path(args.out) / "metrics.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.input is None:
        if args.t is None or (args.rh is None) == (args.p is None):
            raise CliError(EXIT_CONFIG, "give an input file, or --t with exactly one of --rh/--p")
        if args.rh is not None:
            print(json.dumps({"t": args.t, "rh": args.rh, "p": rh_to_vapour_pressure(args.t, args.rh)}))
        else:
            rh, clamped = vapour_pressure_to_rh(args.t, args.p, return_flag=True)
            print(json.dumps({"t": args.t, "p": args.p, "rh": rh, "clamped": clamped}))
        return EXIT_OK
    present = measurement_columns(args.input)
    if "t_i" not in present:
        raise CliError(EXIT_DATA, f"{args.input}: conversion needs a t_i column")
    t = load_measurements_csv(args.input, "t_i")
    if "rh_i" in present:
        rh = load_measurements_csv(args.input, "rh_i")
        p = np.full(len(t), np.nan)
        ok = ~(np.isnan(t.values) | np.isnan(rh.values))
        p[ok] = rh_to_vapour_pressure(t.values[ok], rh.values[ok])
        cols = {"t_i": t.values, "rh_i": rh.values, "p_i": p}
    elif "p_i" in present:
        p = load_measurements_csv(args.input, "p_i")
        rh = np.full(len(t), np.nan)
        ok = ~(np.isnan(t.values) | np.isnan(p.values))
        rh[ok] = vapour_pressure_to_rh(t.values[ok], p.values[ok])
        cols = {"t_i": t.values, "p_i": p.values, "rh_i": rh}
    else:
        raise CliError(EXIT_DATA, f"{args.input}: nothing to convert (no rh_i or p_i column)")
    out = Path(args.out) if args.out else Path(args.input).with_name(Path(args.input).stem + "_converted.csv")
    if out.is_dir() or not out.suffix:
        out = out / "converted.csv"
    atomic_write_text(out, series_csv(t.start, t.step, cols))
    _say(args, f"wrote {out}")
    return EXIT_OK


def _say(args, msg):
    if not getattr(args, "quiet", False):
        print(msg, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcclimate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rcclimate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("simulate", help="simulate indoor conditions for given parameters")
    common(p)
    p.add_argument("--params", default=None, help="parameter file (JSON)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="identify parameters from measurements")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="time state-space vs adaptive RK2(3) simulation")
    common(p, config=False)
    p.add_argument("--horizons", default=None, help="comma-separated horizons in hours")
    p.add_argument("--ode-cap", type=int, default=8760, help="skip the RK2(3) run above this horizon")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--model", choices=("synthetic", "nominal"), default="synthetic")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("metrics", help="MSE, MAE and FIT between two series files")
    common(p, config=False)
    p.add_argument("measured")
    p.add_argument("simulated")
    p.add_argument("--column", default=None, help="measured column (default: first value column)")
    p.add_argument("--sim-column", default=None)
    p.add_argument("--warmup", type=int, default=DEFAULT_WARMUP)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("convert", help="relative humidity <-> vapour pressure")
    common(p, config=False)
    p.add_argument("input", nargs="?", default=None, help="CSV with t_i and rh_i or p_i")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--rh", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IntegrationError, ParameterError, UndefinedFitError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
