import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcclimate.data_io import (
    DataError,
    TimeSeries,
    align,
    atomic_write_text,
    fill_gaps,
    load_climate_csv,
    load_measurements_csv,
    measurement_columns,
    parse_timestamp,
    resample_hourly,
    rh_to_vapour_pressure,
    saturation_vapour_pressure,
    vapour_pressure_to_rh,
    write_climate_csv,
)
from rcclimate.synthetic import make_climate

T0 = datetime(2020, 3, 1, tzinfo=timezone.utc)
CLIMATE_HEADER = "timestamp,t_e,irr_n,irr_e,irr_s,irr_w,p_e"


def stamp(k, step=3600):
    return (T0 + timedelta(seconds=step * k)).strftime("%Y-%m-%dT%H:%M:%SZ")


def write(tmp_path, name, lines):
    p = tmp_path / name
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def climate_rows(hours, skip=()):
    return [f"{stamp(k)},{5 + k * 0.1},0,10,{20 + k},0,800" for k in range(hours) if k not in skip]


def test_two_row_climate(tmp_path):
    p = write(tmp_path, "c.csv", [CLIMATE_HEADER, *climate_rows(2)])
    c = load_climate_csv(p)
    assert len(c) == 2
    assert c.start == T0 and c.step == 3600
    assert c.irr_s.values.tolist() == [20.0, 21.0]


def test_negative_irradiation_names_column_and_line(tmp_path):
    rows = climate_rows(3)
    rows[1] = f"{stamp(1)},5,0,10,-5,0,800"
    p = write(tmp_path, "c.csv", [CLIMATE_HEADER, *rows])
    with pytest.raises(DataError, match=r"line 3.*irr_s"):
        load_climate_csv(p)


def test_missing_hour_is_flagged_gap(tmp_path):
    p = write(tmp_path, "c.csv", [CLIMATE_HEADER, *climate_rows(5, skip={2})])
    c = load_climate_csv(p)
    assert len(c) == 5
    assert c.missing().tolist() == [False, False, True, False, False]


def test_malformed_rows(tmp_path):
    p = write(tmp_path, "a.csv", [CLIMATE_HEADER, f"{stamp(0)},5,0,10,20,0"])
    with pytest.raises(DataError, match="line 2"):
        load_climate_csv(p)
    p = write(tmp_path, "b.csv", [CLIMATE_HEADER, f"{stamp(0)},abc,0,10,20,0,800"])
    with pytest.raises(DataError, match="line 2.*t_e"):
        load_climate_csv(p)
    p = write(tmp_path, "c.csv", [CLIMATE_HEADER, f"{stamp(0)},NaN,0,10,20,0,800"])
    with pytest.raises(DataError, match="not a number"):
        load_climate_csv(p)
    p = write(tmp_path, "d.csv", [CLIMATE_HEADER, "yesterday,5,0,10,20,0,800"])
    with pytest.raises(DataError, match="timestamp"):
        load_climate_csv(p)


def test_non_monotone_timestamps(tmp_path):
    rows = climate_rows(3)
    rows[1], rows[2] = rows[2], rows[1]
    p = write(tmp_path, "c.csv", [CLIMATE_HEADER, *rows])
    with pytest.raises(DataError, match="strictly increasing"):
        load_climate_csv(p)


def test_unit_header_mismatch(tmp_path):
    head = "timestamp,t_e [K],irr_n,irr_e,irr_s,irr_w,p_e"
    p = write(tmp_path, "c.csv", [head, *climate_rows(2)])
    with pytest.raises(DataError, match="unit"):
        load_climate_csv(p)
    head = "timestamp,t_e [degC],irr_n [W/m2],irr_e,irr_s,irr_w,p_e [Pa]"
    p = write(tmp_path, "ok.csv", [head, *climate_rows(2)])
    assert len(load_climate_csv(p)) == 2


def test_header_required(tmp_path):
    p = write(tmp_path, "c.csv", climate_rows(2))
    with pytest.raises(DataError):
        load_climate_csv(p)


def test_measurement_column_absent(tmp_path):
    p = write(tmp_path, "m.csv", ["timestamp,t_i", f"{stamp(0)},18.0", f"{stamp(1)},18.5"])
    assert measurement_columns(p) == ["t_i"]
    assert load_measurements_csv(p, "t_i").values.tolist() == [18.0, 18.5]
    with pytest.raises(DataError, match="column absent"):
        load_measurements_csv(p, "p_i")


def test_rh_out_of_range(tmp_path):
    p = write(tmp_path, "m.csv", ["timestamp,rh_i", f"{stamp(0)},60", f"{stamp(1)},101"])
    with pytest.raises(DataError, match=r"outside \[0, 100\]"):
        load_measurements_csv(p, "rh_i")


@pytest.mark.parametrize("year,hours", [(2019, 8760), (2020, 8784)])
def test_year_long_file(tmp_path, year, hours):
    start = datetime(year, 1, 1, tzinfo=timezone.utc)
    lines = ["timestamp,t_i"]
    k = 0
    t = start
    while t.year == year:
        lines.append(f"{t.strftime('%Y-%m-%dT%H:%M:%SZ')},{15 + (k % 24) * 0.1:.1f}")
        t += timedelta(hours=1)
        k += 1
    s = load_measurements_csv(write(tmp_path, "y.csv", lines), "t_i")
    assert len(s) == hours and s.step == 3600 and not s.missing.any()


def test_resample_ten_minute_constant():
    s = TimeSeries(T0, 600, np.full(6 * 24, 5.0))
    h = resample_hourly(s)
    assert h.step == 3600 and len(h) == 24
    assert np.all(h.values == 5.0)


def test_resample_thirty_minute_mean():
    s = TimeSeries(T0, 1800, [0.0, 2.0, 0.0, 2.0])
    assert resample_hourly(s).values.tolist() == [1.0, 1.0]


def test_resample_conserves_hourly_sums():
    rng = np.random.default_rng(0)
    v = rng.normal(10, 3, 6 * 48)
    h = resample_hourly(TimeSeries(T0, 600, v))
    np.testing.assert_allclose(h.values * 6, v.reshape(-1, 6).sum(axis=1), rtol=1e-12)


def test_gap_policy():
    v = np.arange(20, dtype=float)
    short = v.copy()
    short[3:9] = np.nan  # six hours, in-filled linearly
    out = resample_hourly(TimeSeries(T0, 3600, short))
    np.testing.assert_allclose(out.values, v)
    assert out.filled[3:9].all() and not out.filled[:3].any()
    long = v.copy()
    long[3:11] = np.nan  # eight hours stays missing
    out = resample_hourly(TimeSeries(T0, 3600, long))
    assert np.isnan(out.values[3:11]).all() and not out.filled.any()


def test_edge_gaps_not_extrapolated():
    v, f = fill_gaps([np.nan, 1.0, 2.0, np.nan])
    assert np.isnan(v[0]) and np.isnan(v[3]) and not f.any()


def test_coarse_series_spread_and_filled():
    h = resample_hourly(TimeSeries(T0, 3 * 3600, [0.0, 3.0, 6.0]))
    np.testing.assert_allclose(h.values, np.arange(7.0))


def test_irregular_step_rejected():
    with pytest.raises(DataError, match="irregular"):
        resample_hourly(TimeSeries(T0, 7 * 60, np.zeros(10)))
    with pytest.raises(DataError, match="irregular"):
        resample_hourly(TimeSeries(T0, 5400, np.zeros(10)))


def test_sub_hourly_file_loaded_hourly(tmp_path):
    rows = [f"{stamp(k, 1800)},{k % 2 * 2.0},0,0,0,0,700" for k in range(8)]
    c = load_climate_csv(write(tmp_path, "c.csv", [CLIMATE_HEADER, *rows]))
    assert c.step == 3600 and c.t_e.values.tolist() == [1.0] * 4


def test_align_overlap_and_errors():
    clim = make_climate(100, seed=0)
    meas = TimeSeries(clim.start + timedelta(hours=10), 3600, np.arange(200.0))
    c, m = align(clim, meas)
    assert len(c) == len(m) == 90 and c.start == m.start
    with pytest.raises(DataError, match="overlap"):
        align(clim, TimeSeries(clim.start + timedelta(hours=500), 3600, np.ones(5)))
    with pytest.raises(DataError, match="fraction"):
        align(clim, TimeSeries(clim.start + timedelta(minutes=30), 3600, np.ones(5)))


def test_magnus_values():
    assert rh_to_vapour_pressure(0.0, 100.0) == 611.2
    expected = 0.5 * 611.2 * math.exp(17.62 * 20 / 263.12)
    assert rh_to_vapour_pressure(20.0, 50.0) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(1166.2980110489036, rel=1e-12)


def test_psychrometric_errors_and_clamp():
    with pytest.raises(DataError):
        saturation_vapour_pressure(61.0)
    with pytest.raises(DataError):
        rh_to_vapour_pressure(10.0, -1.0)
    rh, flag = vapour_pressure_to_rh(20.0, 5000.0, return_flag=True)
    assert rh == 100.0 and flag
    rh, flag = vapour_pressure_to_rh(20.0, 1000.0, return_flag=True)
    assert 0 < rh < 100 and not flag


@settings(max_examples=300, deadline=None)
@given(st.floats(-40, 60), st.floats(0, 100))
def test_rh_round_trip(t, rh):
    assert vapour_pressure_to_rh(t, rh_to_vapour_pressure(t, rh)) == pytest.approx(rh, abs=1e-10)


def test_saturation_strictly_increasing():
    t = np.linspace(-40, 60, 100001)
    assert np.all(np.diff(saturation_vapour_pressure(t)) > 0)


def test_climate_round_trip(tmp_path):
    clim = make_climate(48, seed=2)
    path = tmp_path / "out" / "c.csv"
    write_climate_csv(path, clim)
    back = load_climate_csv(path)
    for a, b in zip(clim.series(), back.series()):
        assert np.array_equal(a.values, b.values)
    assert back.start == clim.start


def test_atomic_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "x.txt"
    atomic_write_text(target, "old\n")
    with pytest.raises(TypeError):
        atomic_write_text(target, 123)
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]


def test_timestamp_parsing():
    assert parse_timestamp("2020-03-01T00:00:00Z") == T0
    assert parse_timestamp("2020-03-01 01:00") == T0 + timedelta(hours=1)
    assert parse_timestamp("2020-03-01T02:00:00+01:00") == T0 + timedelta(hours=1)
