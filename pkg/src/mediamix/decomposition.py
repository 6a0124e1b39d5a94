"""Trend / season / weekday / holiday decomposition of the dependent series.

An additive penalized least-squares fit on the dependent variable alone:
piecewise-linear trend with evenly spaced changepoints (slope changes get a
squared penalty), Fourier seasonality bases, and per-date holiday
indicators.  The fitted component series are later used as ordinary context
regressors in the main regression.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .dataset import DAILY, HolidayTable, MmmDataset

TREND = "trend"
SEASON = "season"
WEEKDAY = "weekday"
HOLIDAY = "holiday"

YEAR_DAYS = 365.25
WEEK_DAYS = 7.0

# Tiny ridge on non-trend, non-intercept columns keeps the basis fit unique
# (e.g. a constant dependent series resolves to intercept-only).
_JITTER = 1e-9


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DecompositionConfig:
    components: tuple[str, ...] = (TREND, SEASON, HOLIDAY)
    country: str = ""
    n_changepoints: int = 10
    changepoint_span: float = 0.8
    yearly_fourier_order: int = 10
    weekly_fourier_order: int = 3
    trend_penalty: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        unknown = set(self.components) - {TREND, SEASON, WEEKDAY, HOLIDAY}
        if unknown:
            raise DecompositionError(f"unknown components: {sorted(unknown)}")
        if self.yearly_fourier_order < 1 or self.weekly_fourier_order < 1:
            raise DecompositionError("fourier orders must be >= 1")
        if not 0.0 < self.changepoint_span <= 1.0:
            raise DecompositionError("changepoint_span must be in (0, 1]")
        if self.trend_penalty < 0:
            raise DecompositionError("trend_penalty must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "components": list(self.components),
            "country": self.country,
            "n_changepoints": self.n_changepoints,
            "changepoint_span": self.changepoint_span,
            "yearly_fourier_order": self.yearly_fourier_order,
            "weekly_fourier_order": self.weekly_fourier_order,
            "trend_penalty": self.trend_penalty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionConfig":
        return cls(**{**d, "components": tuple(d.get("components", (TREND, SEASON, HOLIDAY)))})


@dataclass
class DecompositionResult:
    dates: list[dt.date]
    components: dict[str, np.ndarray] = field(default_factory=dict)

    def component_names(self) -> list[str]:
        return list(self.components)

    def save_csv(self, path) -> None:
        names = self.component_names()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ds", *names])
            for i, d in enumerate(self.dates):
                writer.writerow(
                    [d.isoformat(), *(repr(float(self.components[n][i])) for n in names)]
                )


def _fourier_basis(day_index: np.ndarray, period: float, order: int) -> np.ndarray:
    cols = []
    for k in range(1, order + 1):
        angle = 2.0 * np.pi * k * day_index / period
        cols.append(np.sin(angle))
        cols.append(np.cos(angle))
    return np.column_stack(cols)


def decompose(
    ds: MmmDataset, holidays: HolidayTable | None, cfg: DecompositionConfig
) -> DecompositionResult:
    """Fit the additive basis on the in-window dependent series.

    Component series are evaluated over all dataset dates; season and
    weekday components are centered to in-window mean zero (the level moves
    into the trend component).
    """
    if WEEKDAY in cfg.components and ds.frequency != DAILY:
        raise DecompositionError("weekday component requires daily data")
    if HOLIDAY in cfg.components:
        if holidays is None:
            raise DecompositionError("holiday component requires a holiday table")
        if cfg.country not in holidays.countries():
            raise DecompositionError(
                f"country {cfg.country!r} not present in holiday table"
            )

    mask = ds.window_mask()
    y = ds.columns[ds.roles.dep_var]
    all_days = np.array(
        [(d - ds.window_start).days for d in ds.dates], dtype=float
    )
    win_days = all_days[mask]
    span_days = win_days.max() - win_days.min()

    groups: dict[str, slice] = {}
    blocks: list[np.ndarray] = []
    penalties: list[np.ndarray] = []
    start = 0

    def add_block(name: str, block: np.ndarray, penalty: np.ndarray):
        nonlocal start
        blocks.append(block)
        penalties.append(penalty)
        groups[name] = slice(start, start + block.shape[1])
        start += block.shape[1]

    # Trend block: intercept, base slope, hinge terms at evenly spaced
    # changepoints over the first changepoint_span of the window.
    cps = np.linspace(0.0, span_days * cfg.changepoint_span, cfg.n_changepoints + 2)[1:-1]
    trend_cols = [np.ones_like(all_days), all_days / max(span_days, 1.0)]
    for cp in cps:
        trend_cols.append(np.maximum(0.0, all_days - cp) / max(span_days, 1.0))
    trend_block = np.column_stack(trend_cols)
    trend_pen = np.concatenate([[0.0, 0.0], np.full(len(cps), cfg.trend_penalty)])
    add_block(TREND, trend_block, trend_pen)

    if SEASON in cfg.components:
        block = _fourier_basis(all_days, YEAR_DAYS, cfg.yearly_fourier_order)
        add_block(SEASON, block, np.full(block.shape[1], _JITTER))
    if WEEKDAY in cfg.components:
        block = _fourier_basis(all_days, WEEK_DAYS, cfg.weekly_fourier_order)
        add_block(WEEKDAY, block, np.full(block.shape[1], _JITTER))
    if HOLIDAY in cfg.components:
        by_date = holidays.dates_for(cfg.country)
        holiday_dates = sorted(d for d in by_date if d in set(ds.dates))
        if holiday_dates:
            cols = []
            date_pos = {d: i for i, d in enumerate(ds.dates)}
            for hd in holiday_dates:
                col = np.zeros(len(ds.dates))
                col[date_pos[hd]] = 1.0
                cols.append(col)
            add_block(HOLIDAY, np.column_stack(cols), np.full(len(cols), _JITTER))
        else:
            add_block(HOLIDAY, np.zeros((len(ds.dates), 0)), np.zeros(0))

    X_all = np.column_stack(blocks) if blocks else np.zeros((len(ds.dates), 0))
    penalty = np.concatenate(penalties)
    X = X_all[mask]
    yw = y[mask]

    lhs = X.T @ X + np.diag(penalty)
    beta = np.linalg.solve(lhs, X.T @ yw)

    result = DecompositionResult(dates=list(ds.dates))
    fitted = {name: X_all[:, sl] @ beta[sl] for name, sl in groups.items()}

    # Center season/weekday to in-window mean 0; the level belongs to trend.
    trend = fitted[TREND]
    for name in (SEASON, WEEKDAY):
        if name in fitted:
            level = float(fitted[name][mask].mean())
            fitted[name] = fitted[name] - level
            trend = trend + level
    fitted[TREND] = trend

    # Trend is always fitted as the backbone; expose it only if requested.
    for name in (TREND, SEASON, WEEKDAY, HOLIDAY):
        if name in fitted and name in cfg.components:
            result.components[name] = fitted[name]
    return result
