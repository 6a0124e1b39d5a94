"""Input loading, role checks, window handling, and validation warnings."""

import csv
import datetime as dt

import numpy as np
import pytest

from mediamix import dataset as dm

START = dt.date(2019, 1, 7)


def _dates(n, step=7):
    return [START + dt.timedelta(days=step * i) for i in range(n)]


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _basic_csv(path, n=120, extra_cols=(), extra_fn=None):
    rng = np.random.default_rng(0)
    header = ["DATE", "revenue", "tv_S", "search_S", *extra_cols]
    rows = []
    for i, d in enumerate(_dates(n)):
        row = [
            d.isoformat(),
            repr(1e6 + 1e4 * rng.random()),
            repr(1e4 * (1 + rng.random())),
            repr(5e3 * (1 + rng.random())),
        ]
        if extra_fn:
            row.extend(extra_fn(i))
        rows.append(row)
    _write_csv(path, header, rows)
    return path


def _roles(**kw):
    return dm.VariableRoles(dep_var="revenue", paid_media_spends=("tv_S", "search_S"), **kw)


def test_load_basic(tmp_path):
    path = _basic_csv(tmp_path / "d.csv")
    ds = dm.load_dataset(path, _roles(), (START, _dates(120)[-1]))
    assert ds.frequency == dm.WEEKLY
    assert ds.n_rows == 120
    assert ds.n_in_window == 120
    assert ds.date_column == "DATE"


def test_window_row_count(tmp_path):
    # 209 rows with a window starting one year in leaves 157 modeling rows.
    path = _basic_csv(tmp_path / "d.csv", n=209)
    dates = _dates(209)
    ds = dm.load_dataset(path, _roles(), (dates[52], dates[208]))
    assert ds.n_in_window == 157


def test_save_load_round_trip(tmp_path):
    path = _basic_csv(tmp_path / "d.csv")
    ds = dm.load_dataset(path, _roles(), (START, _dates(120)[-1]))
    out = tmp_path / "copy.csv"
    ds.save(out)
    ds2 = dm.load_dataset(out, _roles(), (ds.window_start, ds.window_end))
    assert ds.fingerprint() == ds2.fingerprint()
    for name in ("revenue", "tv_S", "search_S"):
        np.testing.assert_array_equal(ds.columns[name], ds2.columns[name])


def test_fingerprint_changes_with_data(tmp_path):
    path = _basic_csv(tmp_path / "d.csv")
    ds = dm.load_dataset(path, _roles(), (START, _dates(120)[-1]))
    fp = ds.fingerprint()
    assert fp.startswith("sha256:")
    ds.columns["tv_S"] = ds.columns["tv_S"] + 1.0
    assert ds.fingerprint() != fp


def test_factor_one_hot(tmp_path):
    # Factors expand to k-1 indicators with "na" as the reference level.
    levels = ["na", "promo", "event"]
    path = _basic_csv(
        tmp_path / "d.csv", extra_cols=("campaign",), extra_fn=lambda i: [levels[i % 3]]
    )
    roles = _roles(context_vars=("campaign",), factor_vars=("campaign",))
    ds = dm.load_dataset(path, roles, (START, _dates(120)[-1]))
    assert ds.factor_levels["campaign"] == ["na", "event", "promo"]
    assert set(ds.context_columns) == {"campaign_event", "campaign_promo"}
    assert ds.columns["campaign_promo"].sum() == 40.0


def test_roles_validation():
    with pytest.raises(dm.DatasetError):
        dm.VariableRoles(dep_var="y", paid_media_spends=())
    with pytest.raises(dm.DatasetError):
        dm.VariableRoles(dep_var="y", paid_media_spends=("a",), context_vars=("a",))
    with pytest.raises(dm.DatasetError):
        dm.VariableRoles(dep_var="y", paid_media_spends=("a",), prophet_vars=("moon",))
    with pytest.raises(dm.DatasetError):
        dm.VariableRoles(dep_var="y", paid_media_spends=("a",), factor_vars=("b",))
    with pytest.raises(dm.DatasetError):
        dm.VariableRoles(dep_var="y", paid_media_spends=("a",), dep_var_type="clicks")


def test_load_errors(tmp_path):
    dates = _dates(120)
    path = _basic_csv(tmp_path / "d.csv")
    # window outside the data range
    with pytest.raises(dm.DatasetError):
        dm.load_dataset(path, _roles(), (START, dates[-1] + dt.timedelta(days=7)))
    # reversed window
    with pytest.raises(dm.DatasetError):
        dm.load_dataset(path, _roles(), (dates[10], dates[5]))
    # missing role column
    with pytest.raises(dm.DatasetError):
        dm.load_dataset(
            path,
            dm.VariableRoles(dep_var="revenue", paid_media_spends=("radio_S",)),
            (START, dates[-1]),
        )
    # frequency hint conflict
    with pytest.raises(dm.DatasetError):
        dm.load_dataset(path, _roles(), (START, dates[-1]), frequency="daily")


def test_non_uniform_spacing(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(119) + [_dates(120)[-1] + dt.timedelta(days=3)]
    rows = [[d.isoformat(), "1.0", "2.0", "3.0"] for d in dates]
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    with pytest.raises(dm.DatasetError, match="spacing"):
        dm.load_dataset(path, _roles(), (dates[0], dates[10]))


def test_dates_not_increasing(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(10)
    rows = [[d.isoformat(), "1.0", "2.0", "3.0"] for d in dates]
    rows[5][0] = rows[4][0]
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    with pytest.raises(dm.DatasetError, match="increasing"):
        dm.load_dataset(path, _roles(), (dates[0], dates[3]))


def test_negative_spend_rejected(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(110)
    rows = [[d.isoformat(), "1.0", "2.0", "3.0"] for d in dates]
    rows[50][2] = "-1.0"
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    with pytest.raises(dm.DatasetError, match="negative"):
        dm.load_dataset(path, _roles(), (dates[0], dates[-1]))


def test_missing_value_in_window(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(110)
    rows = [[d.isoformat(), "1.0", "2.0", "3.0"] for d in dates]
    rows[50][1] = ""
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    with pytest.raises(dm.DatasetError, match="missing"):
        dm.load_dataset(path, _roles(), (dates[0], dates[-1]))
    # Gaps outside the window are tolerated.
    ds = dm.load_dataset(path, _roles(), (dates[51], dates[-1]))
    assert ds.n_in_window == 59


def test_all_zero_media_rejected(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(110)
    rows = [[d.isoformat(), "1.0", "0.0", "3.0"] for d in dates]
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    with pytest.raises(dm.DatasetError, match="variation"):
        dm.load_dataset(path, _roles(), (dates[0], dates[-1]))


def test_one_in_ten_warning(tmp_path):
    path = _basic_csv(tmp_path / "d.csv", n=120)
    dates = _dates(120)
    # 99 observations cannot support 10 design columns; 100 can.
    ds99 = dm.load_dataset(path, _roles(), (dates[0], dates[98]))
    ds100 = dm.load_dataset(path, _roles(), (dates[0], dates[99]))
    assert any("one-in-ten" in w for w in dm.validate_dataset(ds99, 10).warnings)
    report = dm.validate_dataset(ds100, 10)
    assert not any("one-in-ten" in w for w in report.warnings)


def test_minimum_observation_warning(tmp_path):
    path = _basic_csv(tmp_path / "d.csv", n=120)
    dates = _dates(120)
    ds = dm.load_dataset(path, _roles(), (dates[0], dates[90]))
    assert any("104" in w for w in dm.validate_dataset(ds, 3).warnings)
    full = dm.load_dataset(path, _roles(), (dates[0], dates[-1]))
    assert not any("104" in w for w in dm.validate_dataset(full, 3).warnings)


def test_low_variation_warning(tmp_path):
    path = tmp_path / "d.csv"
    dates = _dates(110)
    rng = np.random.default_rng(1)
    rows = [
        [d.isoformat(), repr(1e6 * (1 + rng.random())), "100.0", repr(1e3 * (1 + rng.random()))]
        for d in dates
    ]
    _write_csv(path, ["DATE", "revenue", "tv_S", "search_S"], rows)
    ds = dm.load_dataset(path, _roles(), (dates[0], dates[-1]))
    report = dm.validate_dataset(ds, 3)
    assert any("tv_S" in w and "low variation" in w for w in report.warnings)
    assert report.ok


def test_report_formatting():
    report = dm.ValidationReport()
    assert str(report) == "OK: no errors or warnings"
    report.warnings.append("w")
    report.errors.append("e")
    assert str(report) == "ERROR: e\nWARNING: w"
    assert not report.ok


def test_load_holidays(tmp_path):
    path = tmp_path / "h.csv"
    _write_csv(
        path,
        ["ds", "holiday", "country"],
        [["2019-12-25", "christmas", "US"], ["2019-07-04", "july4", "US"],
         ["2019-12-25", "christmas", "DE"]],
    )
    table = dm.load_holidays(path)
    assert table.countries() == {"US", "DE"}
    assert sorted(table.dates_for("US")) == [dt.date(2019, 7, 4), dt.date(2019, 12, 25)]
    with pytest.raises(dm.DatasetError):
        dm.HolidayTable(entries=tuple(table.entries) + (table.entries[0],))
