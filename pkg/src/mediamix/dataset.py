"""Input data loading, typing, and validation.

The input table is a UTF-8 CSV with a header row, one row per period, dates
in strict ISO ``YYYY-MM-DD`` format.  Holidays come from a second CSV with
columns ``ds,holiday,country``.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

DAILY = "daily"
WEEKLY = "weekly"

MIN_WEEKLY_OBS = 104
MIN_DAILY_OBS = 180
MIN_MEDIA_CV = 0.05


class DatasetError(ValueError):
    """Raised for malformed or inconsistent input data."""


def _parse_iso_date(text: str) -> dt.date:
    try:
        parsed = dt.datetime.strptime(text.strip(), "%Y-%m-%d").date()
    except ValueError as exc:
        raise DatasetError(f"invalid date {text!r}: expected YYYY-MM-DD") from exc
    return parsed


@dataclass(frozen=True)
class VariableRoles:
    """Column role assignment for an input table."""

    dep_var: str
    paid_media_spends: tuple[str, ...]
    paid_media_vars: tuple[str, ...] = ()
    dep_var_type: str = "revenue"
    organic_vars: tuple[str, ...] = ()
    context_vars: tuple[str, ...] = ()
    factor_vars: tuple[str, ...] = ()
    prophet_vars: tuple[str, ...] = ()
    prophet_country: str = ""

    def __post_init__(self):
        for name in ("paid_media_spends", "paid_media_vars", "organic_vars",
                     "context_vars", "factor_vars", "prophet_vars"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.paid_media_spends:
            raise DatasetError("paid_media_spends must be nonempty")
        if not self.paid_media_vars:
            object.__setattr__(self, "paid_media_vars", self.paid_media_spends)
        if len(self.paid_media_vars) != len(self.paid_media_spends):
            raise DatasetError(
                "paid_media_vars must have the same length and order as paid_media_spends"
            )
        if self.dep_var_type not in ("revenue", "conversion"):
            raise DatasetError(f"unknown dep_var_type {self.dep_var_type!r}")
        allowed_prophet = {"trend", "season", "weekday", "holiday"}
        bad = set(self.prophet_vars) - allowed_prophet
        if bad:
            raise DatasetError(f"unknown prophet_vars: {sorted(bad)}")
        pool = set(self.context_vars) | set(self.organic_vars)
        stray = set(self.factor_vars) - pool
        if stray:
            raise DatasetError(
                f"factor_vars must be a subset of context_vars and organic_vars: {sorted(stray)}"
            )
        role_sets = [
            {self.dep_var},
            set(self.paid_media_spends),
            set(self.organic_vars),
            set(self.context_vars),
        ]
        seen: set[str] = set()
        for group in role_sets:
            overlap = seen & group
            if overlap:
                raise DatasetError(f"column assigned two roles: {sorted(overlap)}")
            seen |= group

    @property
    def numeric_role_columns(self) -> tuple[str, ...]:
        cols = [self.dep_var, *self.paid_media_spends]
        cols += [v for v in self.paid_media_vars if v not in cols]
        cols += [v for v in self.organic_vars if v not in self.factor_vars]
        cols += [v for v in self.context_vars if v not in self.factor_vars]
        return tuple(cols)


@dataclass(frozen=True)
class HolidayTable:
    entries: tuple[tuple[dt.date, str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(set(self.entries)) != len(self.entries):
            raise DatasetError("duplicate (date, holiday, country) entry")

    def countries(self) -> set[str]:
        return {c for _, _, c in self.entries}

    def dates_for(self, country: str) -> dict[dt.date, list[str]]:
        out: dict[dt.date, list[str]] = {}
        for d, name, c in self.entries:
            if c == country:
                out.setdefault(d, []).append(name)
        return out


@dataclass
class MmmDataset:
    """Validated modeling table with role assignment and window."""

    dates: list[dt.date]
    columns: dict[str, np.ndarray]
    factor_values: dict[str, list[str]]
    factor_levels: dict[str, list[str]]
    frequency: str
    date_column: str
    roles: VariableRoles
    window_start: dt.date
    window_end: dt.date
    column_order: list[str] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    @property
    def period_days(self) -> int:
        return 1 if self.frequency == DAILY else 7

    def window_mask(self) -> np.ndarray:
        return np.array(
            [self.window_start <= d <= self.window_end for d in self.dates], dtype=bool
        )

    def window_indices(self) -> np.ndarray:
        return np.nonzero(self.window_mask())[0]

    @property
    def n_in_window(self) -> int:
        return int(self.window_mask().sum())

    def expanded_names(self, names) -> list[str]:
        """Role columns with factors replaced by their indicator columns."""
        out: list[str] = []
        for name in names:
            if name in self.factor_levels:
                levels = self.factor_levels[name]
                out.extend(f"{name}_{lvl}" for lvl in levels[1:])
            else:
                out.append(name)
        return out

    @property
    def context_columns(self) -> list[str]:
        return self.expanded_names(self.roles.context_vars)

    @property
    def organic_columns(self) -> list[str]:
        return self.expanded_names(self.roles.organic_vars)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(",".join(self.column_order).encode())
        for d in self.dates:
            h.update(d.isoformat().encode())
        for name in self.column_order:
            if name == self.date_column:
                continue
            if name in self.factor_values:
                h.update("\x1f".join(self.factor_values[name]).encode())
            else:
                h.update(self.columns[name].tobytes())
        return "sha256:" + h.hexdigest()

    def save(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.column_order)
            for i, d in enumerate(self.dates):
                row = []
                for name in self.column_order:
                    if name == self.date_column:
                        row.append(d.isoformat())
                    elif name in self.factor_values:
                        row.append(self.factor_values[name][i])
                    else:
                        row.append(repr(float(self.columns[name][i])))
                writer.writerow(row)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> str:
        return json.dumps(
            {"ok": self.ok, "errors": self.errors, "warnings": self.warnings}, indent=2
        )

    def __str__(self) -> str:
        lines = []
        for msg in self.errors:
            lines.append(f"ERROR: {msg}")
        for msg in self.warnings:
            lines.append(f"WARNING: {msg}")
        if not lines:
            lines.append("OK: no errors or warnings")
        return "\n".join(lines)


def _infer_frequency(dates: list[dt.date]) -> str:
    gaps = [(b - a).days for a, b in zip(dates, dates[1:])]
    median_gap = sorted(gaps)[len(gaps) // 2]
    if median_gap == 1:
        return DAILY
    if median_gap == 7:
        return WEEKLY
    raise DatasetError(f"cannot infer frequency from median date gap of {median_gap} days")


def load_dataset(path, roles: VariableRoles, window, frequency: str | None = None) -> MmmDataset:
    """Load and validate a CSV into an MmmDataset.

    ``window`` is a (start, end) pair of dates or ISO strings; the date column
    is taken to be the first column unless a column named DATE/date/ds exists.
    """
    window_start, window_end = window
    if isinstance(window_start, str):
        window_start = _parse_iso_date(window_start)
    if isinstance(window_end, str):
        window_end = _parse_iso_date(window_end)
    if window_end < window_start:
        raise DatasetError("window_end before window_start")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        raw_rows = [row for row in reader if row]
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DatasetError("duplicate column names in header")

    date_column = next((c for c in header if c in ("DATE", "date", "ds")), header[0])

    missing = [c for c in (*roles.numeric_role_columns, *roles.factor_vars) if c not in header]
    if missing:
        raise DatasetError(f"unknown role column(s): {missing}")

    idx = {name: i for i, name in enumerate(header)}
    dates = []
    cells: dict[str, list[str]] = {name: [] for name in header if name != date_column}
    for row in raw_rows:
        if len(row) != len(header):
            raise DatasetError(f"row with {len(row)} cells, expected {len(header)}")
        dates.append(_parse_iso_date(row[idx[date_column]]))
        for name in cells:
            cells[name].append(row[idx[name]].strip())

    if len(dates) < 2:
        raise DatasetError("need at least two rows")
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            raise DatasetError(f"dates not strictly increasing at {b.isoformat()}")
    inferred = _infer_frequency(dates)
    if frequency is not None and frequency != inferred:
        raise DatasetError(f"frequency hint {frequency!r} conflicts with inferred {inferred!r}")
    frequency = inferred
    step = 1 if frequency == DAILY else 7
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != step:
            raise DatasetError(
                f"non-uniform date spacing: gap of {(b - a).days} days at {b.isoformat()}"
            )

    if window_start < dates[0] or window_end > dates[-1]:
        raise DatasetError(
            f"window [{window_start}, {window_end}] outside data range "
            f"[{dates[0]}, {dates[-1]}]"
        )

    factor_set = set(roles.factor_vars)
    columns: dict[str, np.ndarray] = {}
    factor_values: dict[str, list[str]] = {}
    in_window = np.array([window_start <= d <= window_end for d in dates], dtype=bool)

    for name, values in cells.items():
        if name in factor_set:
            factor_values[name] = list(values)
            continue
        numeric = np.full(len(values), np.nan)
        parseable = True
        for i, v in enumerate(values):
            if v == "":
                continue
            try:
                numeric[i] = float(v)
            except ValueError:
                parseable = False
                break
        if not parseable:
            if name in roles.numeric_role_columns:
                raise DatasetError(
                    f"column {name!r} is non-numeric; declare it in factor_vars"
                )
            factor_values[name] = list(values)
            continue
        columns[name] = numeric

    # Hard errors inside the window: missing values, non-finite, negative spend.
    nonneg_cols = set(roles.paid_media_spends) | set(roles.paid_media_vars) | {
        v for v in roles.organic_vars if v not in factor_set
    }
    for name in roles.numeric_role_columns:
        vals = columns[name][in_window]
        if np.isnan(vals).any():
            raise DatasetError(f"missing values in column {name!r} inside the window")
        if not np.isfinite(vals).all():
            raise DatasetError(f"non-finite values in column {name!r}")
        if name in nonneg_cols and (vals < 0).any():
            raise DatasetError(f"negative values in column {name!r}")
    for name in roles.paid_media_spends:
        if np.ptp(columns[name][in_window]) == 0 and columns[name][in_window].max() == 0:
            raise DatasetError(f"media column {name!r} has no variation")

    # One-hot expansion of factor columns; "na" acts as the reference level.
    factor_levels: dict[str, list[str]] = {}
    for name in roles.factor_vars:
        values = factor_values[name]
        levels = sorted(set(values))
        if "na" in levels:
            levels.remove("na")
            levels.insert(0, "na")
        factor_levels[name] = levels
        for lvl in levels[1:]:
            columns[f"{name}_{lvl}"] = np.array(
                [1.0 if v == lvl else 0.0 for v in values]
            )

    return MmmDataset(
        dates=dates,
        columns=columns,
        factor_values=factor_values,
        factor_levels=factor_levels,
        frequency=frequency,
        date_column=date_column,
        roles=roles,
        window_start=window_start,
        window_end=window_end,
        column_order=list(header),
    )


def validate_dataset(ds: MmmDataset, model_width: int) -> ValidationReport:
    """Non-blocking hygiene checks; returns a report, never raises."""
    report = ValidationReport()
    n = ds.n_in_window
    if model_width * 10 > n:
        report.warnings.append(
            f"one-in-ten violated: {model_width} design columns need at least "
            f"{model_width * 10} observations, window has {n}"
        )
    minimum = MIN_WEEKLY_OBS if ds.frequency == WEEKLY else MIN_DAILY_OBS
    if n < minimum:
        report.warnings.append(
            f"only {n} in-window observations; at least {minimum} {ds.frequency} "
            "observations recommended"
        )
    mask = ds.window_mask()
    for name in ds.roles.paid_media_spends:
        vals = ds.columns[name][mask]
        mean = float(vals.mean())
        cv = float(vals.std()) / mean if mean > 0 else 0.0
        if cv < MIN_MEDIA_CV:
            report.warnings.append(
                f"media column {name!r} has low variation (CV={cv:.4f} < {MIN_MEDIA_CV})"
            )
    return report


def load_holidays(path) -> HolidayTable:
    """Read a ``ds,holiday,country`` CSV."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"ds", "holiday", "country"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DatasetError(f"holiday table must have columns {sorted(required)}")
        for row in reader:
            entries.append(
                (_parse_iso_date(row["ds"]), row["holiday"].strip(), row["country"].strip())
            )
    return HolidayTable(entries=tuple(entries))
