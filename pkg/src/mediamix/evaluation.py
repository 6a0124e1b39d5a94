"""Objective functions: NRMSE is computed in regression; this module adds
Decomp.RSSD (business error), MAPE.LIFT (calibration error), and the
weighted scalarization used for candidate ranking."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

LIFT_CSV_COLUMNS = [
    "channel",
    "liftStartDate",
    "liftEndDate",
    "liftAbs",
    "spend",
    "confidence",
    "metric",
    "calibration_scope",
]

SCOPE_IMMEDIATE = "immediate"
SCOPE_TOTAL = "total"


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class LiftStudy:
    channels: tuple[str, ...]
    lift_start: dt.date
    lift_end: dt.date
    lift_abs: float
    spend: float = 0.0
    confidence: float = 1.0
    metric: str = "revenue"
    scope: str = SCOPE_TOTAL

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.lift_end < self.lift_start:
            raise EvaluationError("lift_end before lift_start")
        if self.lift_abs == 0:
            raise EvaluationError("lift_abs must be nonzero")
        if not 0.0 < self.confidence <= 1.0:
            raise EvaluationError("confidence must be in (0, 1]")
        if self.spend < 0:
            raise EvaluationError("spend must be nonnegative")
        if self.scope not in (SCOPE_IMMEDIATE, SCOPE_TOTAL):
            raise EvaluationError(f"unknown calibration_scope {self.scope!r}")


@dataclass
class ObjectiveScores:
    nrmse: float
    decomp_rssd: float
    mape_lift: float | None = None

    def as_tuple(self) -> tuple:
        return (self.nrmse, self.decomp_rssd, self.mape_lift)


def decomp_rssd(effect_shares, spend_shares) -> float:
    """Root sum of squared distances between per-channel effect shares and
    spend (or reference) shares.  Both are dicts over identical channels."""
    if set(effect_shares) != set(spend_shares):
        raise EvaluationError(
            f"mismatched channels: {sorted(effect_shares)} vs {sorted(spend_shares)}"
        )
    total = 0.0
    for c in effect_shares:
        total += (effect_shares[c] - spend_shares[c]) ** 2
    return math.sqrt(total)


def predicted_lift(candidate, study: LiftStudy) -> float:
    """Model-implied incremental outcome for one study: the named channels'
    contributions summed over the study window, lag-0-only for the
    `immediate` scope."""
    dates = candidate.window_dates
    if study.lift_end < dates[0] or study.lift_start > dates[-1]:
        raise EvaluationError(
            f"study window [{study.lift_start}, {study.lift_end}] outside the "
            "modeling window"
        )
    mask = np.array(
        [study.lift_start <= d <= study.lift_end for d in dates], dtype=bool
    )
    total = 0.0
    for channel in study.channels:
        if study.scope == SCOPE_IMMEDIATE:
            series = candidate.immediate_contributions.get(channel)
        else:
            series = candidate.contributions.get(channel)
        if series is None:
            raise EvaluationError(f"unknown channel {channel!r} in lift study")
        total += float(series[mask].sum())
    return total


def mape_lift(candidate, studies) -> float:
    """Confidence-weighted mean absolute percentage error across studies."""
    if not studies:
        raise EvaluationError("no lift studies given")
    num = 0.0
    den = 0.0
    for study in studies:
        pred = predicted_lift(candidate, study)
        ape = abs(pred - study.lift_abs) / abs(study.lift_abs)
        num += study.confidence * ape
        den += study.confidence
    return num / den


@dataclass
class ObjectiveRanges:
    """Running archive min/max per objective, used to make the objectives
    commensurable before weighting."""

    lo: list[float]
    hi: list[float]

    @classmethod
    def empty(cls) -> "ObjectiveRanges":
        return cls(lo=[math.inf] * 3, hi=[-math.inf] * 3)

    def update(self, scores: ObjectiveScores) -> None:
        for k, v in enumerate(scores.as_tuple()):
            if v is None or not math.isfinite(v):
                continue
            self.lo[k] = min(self.lo[k], v)
            self.hi[k] = max(self.hi[k], v)

    def normalize(self, k: int, v: float) -> float:
        span = self.hi[k] - self.lo[k]
        if not math.isfinite(span) or span <= 0:
            return 0.0
        return (v - self.lo[k]) / span

    def snapshot(self) -> "ObjectiveRanges":
        return ObjectiveRanges(lo=list(self.lo), hi=list(self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def scalarize(scores: ObjectiveScores, weights, ranges: ObjectiveRanges) -> float:
    """Weighted mean of min-max normalized objectives (degenerate range
    normalizes to 0)."""
    weights = tuple(weights)
    if len(weights) != 3 or any(w < 0 for w in weights):
        raise EvaluationError("weights must be three nonnegative reals")
    wsum = sum(weights)
    if wsum == 0:
        raise EvaluationError("at least one weight must be positive")
    values = scores.as_tuple()
    total = 0.0
    for k, w in enumerate(weights):
        if w == 0:
            continue
        v = values[k]
        if v is None:
            raise EvaluationError(
                "mape weight is positive but no calibration input was given"
            )
        total += w * ranges.normalize(k, v)
    return total / wsum


def load_lift_studies(path) -> list[LiftStudy]:
    """Read lift studies from CSV; multi-channel studies join names by '+'."""
    studies = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(LIFT_CSV_COLUMNS) <= set(reader.fieldnames):
            raise EvaluationError(f"lift study CSV must have columns {LIFT_CSV_COLUMNS}")
        for row in reader:
            studies.append(
                LiftStudy(
                    channels=tuple(row["channel"].split("+")),
                    lift_start=dt.date.fromisoformat(row["liftStartDate"]),
                    lift_end=dt.date.fromisoformat(row["liftEndDate"]),
                    lift_abs=float(row["liftAbs"]),
                    spend=float(row["spend"]),
                    confidence=float(row["confidence"]),
                    metric=row["metric"],
                    scope=row["calibration_scope"],
                )
            )
    return studies


def save_lift_studies(studies, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LIFT_CSV_COLUMNS)
        for s in studies:
            writer.writerow(
                [
                    "+".join(s.channels),
                    s.lift_start.isoformat(),
                    s.lift_end.isoformat(),
                    repr(float(s.lift_abs)),
                    repr(float(s.spend)),
                    repr(float(s.confidence)),
                    s.metric,
                    s.scope,
                ]
            )
