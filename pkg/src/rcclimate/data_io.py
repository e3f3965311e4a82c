"""Hourly climate and indoor-measurement CSV ingestion, resampling and psychrometrics.

CSV layout: comma separated, UTF-8, header row first, ISO-8601 timestamps in
the ``timestamp`` column, empty cells for missing values. A header may carry a
unit in brackets, e.g. ``t_e [degC]``; when present it must match the
expected unit.
"""
from __future__ import annotations

import csv
import math
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

HOUR = 3600
MAX_FILL_HOURS = 6

# Magnus form over water
MAGNUS_A = 611.2
MAGNUS_B = 17.62
MAGNUS_C = 243.12
T_RANGE = (-40.0, 60.0)

CLIMATE_COLUMNS = ("t_e", "irr_n", "irr_e", "irr_s", "irr_w", "p_e")
MEASUREMENT_COLUMNS = ("t_i", "rh_i", "p_i")

_UNITS = {
    "t_e": ("degC", "°C", "C"),
    "t_i": ("degC", "°C", "C"),
    "irr_n": ("W/m2", "W/m²", "W m-2", "W/m^2"),
    "irr_e": ("W/m2", "W/m²", "W m-2", "W/m^2"),
    "irr_s": ("W/m2", "W/m²", "W m-2", "W/m^2"),
    "irr_w": ("W/m2", "W/m²", "W m-2", "W/m^2"),
    "p_e": ("Pa",),
    "p_i": ("Pa",),
    "rh_i": ("%", "percent"),
}
_CANONICAL_UNIT = {k: v[0] for k, v in _UNITS.items()}
_HEADER = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[(.*)\])?\s*$")


class DataError(ValueError):
    """Malformed, inconsistent or out-of-range input data."""


@dataclass
class TimeSeries:
    """Uniformly sampled scalar series; NaN marks a missing sample."""

    start: datetime
    step: float
    values: np.ndarray
    unit: str = ""
    filled: np.ndarray | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise DataError(f"step must be > 0, got {self.step}")
        if self.start.tzinfo is None:
            self.start = self.start.replace(tzinfo=timezone.utc)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.filled is None:
            self.filled = np.zeros(self.values.size, dtype=bool)
        if np.isinf(self.values).any():
            raise DataError("series contains infinite values")

    def __len__(self):
        return self.values.size

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def end(self) -> datetime:
        return self.start + timedelta(seconds=self.step * (len(self) - 1))

    def timestamps(self) -> list[datetime]:
        return [self.start + timedelta(seconds=self.step * k) for k in range(len(self))]

    def slice(self, first: int, stop: int) -> "TimeSeries":
        return replace(self, start=self.start + timedelta(seconds=self.step * first),
                       values=self.values[first:stop].copy(), filled=self.filled[first:stop].copy())


@dataclass
class ClimateDataset:
    """Hourly outdoor drivers sharing one time grid."""

    t_e: TimeSeries
    irr_n: TimeSeries
    irr_e: TimeSeries
    irr_s: TimeSeries
    irr_w: TimeSeries
    p_e: TimeSeries
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ref = self.t_e
        for name in CLIMATE_COLUMNS:
            s = getattr(self, name)
            if s.start != ref.start or s.step != ref.step or len(s) != len(ref):
                raise DataError(f"climate series {name} is not aligned with t_e")
        for name in CLIMATE_COLUMNS[1:5]:
            if np.nanmin(getattr(self, name).values, initial=0.0) < 0:
                raise DataError(f"{name} contains negative irradiation")

    def __len__(self):
        return len(self.t_e)

    @property
    def start(self):
        return self.t_e.start

    @property
    def step(self):
        return self.t_e.step

    def series(self):
        return [getattr(self, n) for n in CLIMATE_COLUMNS]

    def slice(self, first: int, stop: int) -> "ClimateDataset":
        return ClimateDataset(*(s.slice(first, stop) for s in self.series()), meta=dict(self.meta))

    def map(self, fn) -> "ClimateDataset":
        return ClimateDataset(*(fn(s) for s in self.series()), meta=dict(self.meta))

    def missing(self) -> np.ndarray:
        return np.any([s.missing for s in self.series()], axis=0)


def parse_timestamp(text: str) -> datetime:
    t = text.strip()
    if t.endswith("Z"):
        t = t[:-1] + "+00:00"
    ts = datetime.fromisoformat(t)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _read_table(path, wanted, required=True):
    """Read ``timestamp`` plus the ``wanted`` columns.

    Returns (times, {name: values}, {name: unit}). Unwanted columns are ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row expected") from None
        index, units = {}, {}
        for pos, raw in enumerate(header):
            mt = _HEADER.match(raw)
            if not mt:
                raise DataError(f"{path}: cannot parse header field {raw!r}")
            name, unit = mt.group(1), mt.group(2)
            index[name] = pos
            if unit is not None:
                unit = unit.strip()
                if name in _UNITS and unit not in _UNITS[name]:
                    raise DataError(f"{path}: column {name} has unit {unit!r}, "
                                    f"expected {_CANONICAL_UNIT[name]!r}")
            units[name] = _CANONICAL_UNIT.get(name, unit or "")
        if "timestamp" not in index:
            raise DataError(f"{path}: header has no 'timestamp' column")
        present = [c for c in wanted if c in index]
        if required:
            absent = [c for c in wanted if c not in index]
            if absent:
                raise DataError(f"{path}: column absent: {', '.join(absent)}")

        times, cols = [], {c: [] for c in present}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[index["timestamp"]])
            except ValueError:
                raise DataError(f"{path}, line {lineno}: bad timestamp "
                                f"{row[index['timestamp']]!r}") from None
            if times and ts <= times[-1]:
                raise DataError(f"{path}, line {lineno}: timestamps not strictly increasing")
            times.append(ts)
            for c in present:
                cell = row[index[c]].strip()
                if cell == "":
                    cols[c].append(math.nan)
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    value = math.nan
                if not math.isfinite(value):
                    raise DataError(f"{path}, line {lineno}: column {c}: not a number: {cell!r}")
                _check_range(c, value, f"{path}, line {lineno}")
                cols[c].append(value)
    if not times:
        raise DataError(f"{path}: no data rows")
    return times, cols, {c: units[c] for c in present}


def _check_range(column, value, where):
    if column.startswith("irr_") and value < 0:
        raise DataError(f"{where}: column {column}: negative irradiation {value}")
    if column == "rh_i" and not 0.0 <= value <= 100.0:
        raise DataError(f"{where}: column rh_i: RH {value} outside [0, 100]")
    if column in ("p_e", "p_i") and value < 0:
        raise DataError(f"{where}: column {column}: negative vapour pressure {value}")


def _to_grid(times, values, path):
    """Place samples on a regular grid; rows missing from the file become NaN."""
    if len(times) == 1:
        step = HOUR
    else:
        diffs = [(b - a).total_seconds() for a, b in zip(times, times[1:])]
        step = min(diffs)
        for i, dd in enumerate(diffs):
            if abs(dd / step - round(dd / step)) > 1e-9:
                raise DataError(f"{path}, line {i + 3}: irregular time step {dd} s "
                                f"(base step {step} s)")
    offsets = [round((t - times[0]).total_seconds() / step) for t in times]
    n = offsets[-1] + 1
    out = {}
    for c, vals in values.items():
        arr = np.full(n, np.nan)
        arr[offsets] = vals
        out[c] = arr
    return times[0], float(step), out


def load_climate_csv(path) -> ClimateDataset:
    """Load ``timestamp,t_e,irr_n,irr_e,irr_s,irr_w,p_e`` onto an hourly grid.

    Missing rows and empty cells become NaN entries; sub-hourly files are
    averaged to hourly via :func:`resample_hourly` (which also in-fills gaps of
    at most six hours).
    """
    times, cols, units = _read_table(path, CLIMATE_COLUMNS)
    start, step, grid = _to_grid(times, cols, path)
    series = [TimeSeries(start, step, grid[c], units[c]) for c in CLIMATE_COLUMNS]
    if step != HOUR:
        series = [resample_hourly(s) for s in series]
    return ClimateDataset(*series, meta={"source": str(path)})


def load_measurements_csv(path, column) -> TimeSeries:
    """Load one indoor series (``t_i``, ``rh_i`` or ``p_i``) with its native step."""
    if column not in MEASUREMENT_COLUMNS:
        raise DataError(f"unknown measurement column {column!r}; expected one of {MEASUREMENT_COLUMNS}")
    times, cols, units = _read_table(path, (column,))
    start, step, grid = _to_grid(times, cols, path)
    return TimeSeries(start, step, grid[column], units[column])


def measurement_columns(path) -> list[str]:
    """Names of the indoor measurement columns present in a CSV header."""
    with Path(path).open(newline="", encoding="utf-8-sig") as fh:
        header = next(csv.reader(fh), [])
    names = [m.group(1) for m in map(_HEADER.match, header) if m]
    return [c for c in MEASUREMENT_COLUMNS if c in names]


def fill_gaps(values, max_gap=MAX_FILL_HOURS):
    """Linearly in-fill interior NaN runs of length <= ``max_gap``.

    Returns (filled values, mask of in-filled samples).
    """
    v = np.asarray(values, dtype=float).copy()
    filled = np.zeros(v.size, dtype=bool)
    nan = np.isnan(v)
    k = 0
    while k < v.size:
        if not nan[k]:
            k += 1
            continue
        j = k
        while j < v.size and nan[j]:
            j += 1
        if k > 0 and j < v.size and j - k <= max_gap:
            left, right = v[k - 1], v[j]
            frac = np.arange(1, j - k + 1) / (j - k + 1)
            v[k:j] = left + (right - left) * frac
            filled[k:j] = True
        k = j
    return v, filled


def resample_hourly(series: TimeSeries, max_gap=MAX_FILL_HOURS) -> TimeSeries:
    """Bring a series onto an hourly grid.

    Sub-hourly samples are averaged per clock hour (NaNs skipped); coarser
    series are spread onto the hourly grid with the in-between hours missing.
    Afterwards interior gaps of at most ``max_gap`` hours are linearly filled
    and flagged; longer gaps stay missing.
    """
    step = float(series.step)
    if step == HOUR:
        start, vals = series.start, series.values.copy()
    elif step < HOUR:
        if HOUR % step:
            raise DataError(f"irregular step {step} s: does not divide one hour")
        per = int(round(HOUR / step))
        offset = series.start.minute * 60 + series.start.second
        if offset % step:
            raise DataError(f"series start {series.start} is not on the {step} s grid")
        lead = int(offset // step)
        padded = np.concatenate([np.full(lead, np.nan), series.values])
        tail = (-padded.size) % per
        padded = np.concatenate([padded, np.full(tail, np.nan)]).reshape(-1, per)
        counts = np.sum(~np.isnan(padded), axis=1)
        sums = np.nansum(padded, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        start = series.start.replace(minute=0, second=0, microsecond=0)
    else:
        if step % HOUR:
            raise DataError(f"irregular step {step} s: not a multiple of one hour")
        per = int(round(step / HOUR))
        vals = np.full((len(series) - 1) * per + 1, np.nan)
        vals[::per] = series.values
        start = series.start
    vals, filled = fill_gaps(vals, max_gap)
    return TimeSeries(start, float(HOUR), vals, series.unit, filled)


def align(climate: ClimateDataset, measured: TimeSeries):
    """Cut climate and measurements to their common hourly window.

    Raises :class:`DataError` if the grids are incompatible or do not overlap.
    """
    if climate.step != HOUR or measured.step != HOUR:
        raise DataError("align expects hourly series; resample first")
    shift = (measured.start - climate.start).total_seconds() / HOUR
    if shift != round(shift):
        raise DataError("climate and measurement grids are offset by a fraction of an hour")
    shift = int(round(shift))
    c0 = max(0, shift)
    m0 = max(0, -shift)
    n = min(len(climate) - c0, len(measured) - m0)
    if n <= 0:
        raise DataError("climate and measurement periods do not overlap")
    c, m = climate.slice(c0, c0 + n), measured.slice(m0, m0 + n)
    if c.start != m.start or len(c) != len(m):
        raise DataError("alignment failed")
    return c, m


def saturation_vapour_pressure(t):
    """Saturation vapour pressure over water [Pa], Magnus form, ``t`` in °C."""
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < T_RANGE[0]) or np.any(t > T_RANGE[1]):
        raise DataError(f"temperature outside [{T_RANGE[0]}, {T_RANGE[1]}] °C")
    out = MAGNUS_A * np.exp(MAGNUS_B * t / (MAGNUS_C + t))
    return out if out.ndim else float(out)


def rh_to_vapour_pressure(t, rh):
    rh_arr = np.asarray(rh, dtype=float)
    if np.any(~(rh_arr >= 0.0)) or np.any(rh_arr > 100.0):
        raise DataError("relative humidity outside [0, 100] %")
    out = rh_arr / 100.0 * saturation_vapour_pressure(t)
    return out if np.ndim(out) else float(out)


def vapour_pressure_to_rh(t, p, return_flag=False):
    """Relative humidity [%] clamped to [0, 100].

    With ``return_flag`` also returns a boolean (array) marking supersaturated
    samples whose value was clamped.
    """
    p_arr = np.asarray(p, dtype=float)
    raw = 100.0 * p_arr / saturation_vapour_pressure(t)
    clamped = (raw > 100.0) | (raw < 0.0)
    rh = np.clip(raw, 0.0, 100.0)
    if not np.ndim(rh):
        rh, clamped = float(rh), bool(clamped)
    return (rh, clamped) if return_flag else rh


def atomic_write_text(path, text: str):
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_csv(start: datetime, step: float, columns: dict) -> str:
    """CSV text with a timestamp column plus the given named arrays."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n = arrays[0].size if arrays else 0
    lines = [",".join(["timestamp", *names])]
    for k in range(n):
        ts = format_timestamp(start + timedelta(seconds=step * k))
        cells = ["" if math.isnan(a[k]) else repr(float(a[k])) for a in arrays]
        lines.append(",".join([ts, *cells]))
    return "\n".join(lines) + "\n"


def write_climate_csv(path, climate: ClimateDataset):
    cols = {f"{n} [{_CANONICAL_UNIT[n]}]": getattr(climate, n).values for n in CLIMATE_COLUMNS}
    atomic_write_text(path, series_csv(climate.start, climate.step, cols))
