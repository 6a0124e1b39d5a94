"""Candidate evaluation chain: transforms -> design -> ridge fit ->
contribution decomposition -> objective scores.

This is the shared core behind the hyperparameter search, the one-pager
metrics, model export/import re-scoring, and the allocator's response
surface inputs.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from . import evaluation, regression, transforms
from .dataset import MmmDataset
from .decomposition import DecompositionResult
from .evaluation import LiftStudy, ObjectiveScores
from .regression import (
    CONTEXT,
    DECOMP,
    MEDIA,
    ORGANIC,
    DesignMatrix,
    FitMetrics,
    RidgeFit,
    SplitPlan,
)
from .transforms import AdstockParams, SaturationParams, TransformedChannel


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class HyperparameterVector:
    """One point in the search space: per-channel transform parameters plus
    the unit-interval ridge penalty position."""

    family: str
    channels: dict[str, dict[str, float]]
    lambda_hp: float
    max_lag: int

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "channels": {c: dict(p) for c, p in self.channels.items()},
            "lambda_hp": self.lambda_hp,
            "max_lag": self.max_lag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperparameterVector":
        return cls(
            family=d["family"],
            channels={c: dict(p) for c, p in d["channels"].items()},
            lambda_hp=float(d["lambda_hp"]),
            max_lag=int(d["max_lag"]),
        )

    def adstock_params(self, channel: str) -> AdstockParams:
        p = self.channels[channel]
        if self.family == transforms.GEOMETRIC:
            return AdstockParams(family=self.family, theta=p["theta"])
        return AdstockParams(
            family=self.family, shape=p["shape"], scale=p["scale"], max_lag=self.max_lag
        )

    def saturation_params(self, channel: str) -> SaturationParams:
        p = self.channels[channel]
        return SaturationParams(alpha=p["alpha"], gamma=p["gamma"])


@dataclass
class FittedCandidate:
    """A fully evaluated model candidate."""

    hv: HyperparameterVector
    design: DesignMatrix
    fit: RidgeFit
    metrics: FitMetrics
    channel_transforms: dict[str, TransformedChannel]
    window_dates: list[dt.date]
    contributions: dict[str, np.ndarray]
    immediate_contributions: dict[str, np.ndarray]
    baseline_intercept: float
    effect_shares: dict[str, float]
    spend_shares: dict[str, float]
    channel_effect: dict[str, float]
    channel_spend: dict[str, float]
    roi: dict[str, float]
    scores: ObjectiveScores
    lam: float
    dep_var_type: str
    id: str = ""
    pareto_front: int | None = None
    cluster: int | None = None

    @property
    def predicted(self) -> np.ndarray:
        return self.fit.predict(self.design)

    @property
    def actual(self) -> np.ndarray:
        return self.design.y

    def efficiency(self) -> dict[str, float]:
        """ROI for revenue outcomes, CPA for conversion outcomes."""
        if self.dep_var_type == "revenue":
            return dict(self.roi)
        out = {}
        for c, eff in self.channel_effect.items():
            out[c] = self.channel_spend[c] / eff if eff > 0 else float("inf")
        return out

    def carryover_ratio(self, channel: str) -> float:
        """Mean in-window adstocked level per unit of mean raw spend."""
        tc = self.channel_transforms[channel]
        mask = self._window_mask
        raw_mean = float(self._raw_series[channel][mask].mean())
        if raw_mean <= 0:
            raise PipelineError(f"channel {channel!r} has zero historical spend")
        return float(tc.adstocked[mask].mean()) / raw_mean

    # Filled by evaluate_candidate; not part of the public contract.
    _window_mask: np.ndarray = field(default=None, repr=False)
    _raw_series: dict[str, np.ndarray] = field(default=None, repr=False)


def _transform_all(
    ds: MmmDataset, hv: HyperparameterVector
) -> dict[str, TransformedChannel]:
    mask = ds.window_mask()
    out = {}
    for name in (*ds.roles.paid_media_spends, *_numeric_organic(ds)):
        out[name] = transforms.transform_channel(
            ds.columns[name],
            hv.adstock_params(name),
            hv.saturation_params(name),
            window_mask=mask,
            name=name,
        )
    return out


def _numeric_organic(ds: MmmDataset) -> list[str]:
    """Organic variables that get the adstock+saturation path; factor
    organics enter as plain indicators alongside context."""
    return [v for v in ds.roles.organic_vars if v not in ds.roles.factor_vars]


def transform_channel_names(ds: MmmDataset) -> list[str]:
    return [*ds.roles.paid_media_spends, *_numeric_organic(ds)]


def build_design(
    ds: MmmDataset,
    decomp: DecompositionResult | None,
    channel_transforms: dict[str, TransformedChannel],
    split: SplitPlan,
) -> DesignMatrix:
    mask = ds.window_mask()
    names: list[str] = []
    groups: list[str] = []
    cols: list[np.ndarray] = []

    for name in ds.roles.paid_media_spends:
        names.append(name)
        groups.append(MEDIA)
        cols.append(channel_transforms[name].saturated[mask])
    for name in _numeric_organic(ds):
        names.append(name)
        groups.append(ORGANIC)
        cols.append(channel_transforms[name].saturated[mask])
    factor_organic = [v for v in ds.roles.organic_vars if v in ds.roles.factor_vars]
    for name in ds.expanded_names(factor_organic):
        names.append(name)
        groups.append(ORGANIC)
        cols.append(ds.columns[name][mask])
    for name in ds.context_columns:
        names.append(name)
        groups.append(CONTEXT)
        cols.append(ds.columns[name][mask])
    if decomp is not None:
        for comp, series in decomp.components.items():
            names.append(f"decomp_{comp}")
            groups.append(DECOMP)
            cols.append(series[mask])

    y = ds.columns[ds.roles.dep_var][mask]
    raw = np.column_stack(cols)

    # Context/decomposition columns constant over the training split carry no
    # information and would break standardization; drop them.
    train, _, _ = split.split_indices(len(y))
    keep = []
    for j in range(raw.shape[1]):
        col = raw[train, j]
        # Relative tolerance: filtering can leave ~1e-16 jitter on a
        # numerically constant column.
        if col.std() > 1e-12 * max(1.0, float(np.abs(col).max())):
            keep.append(j)
        elif groups[j] in (MEDIA, ORGANIC):
            raise PipelineError(
                f"column {names[j]!r} is constant on the training split"
            )
    raw = raw[:, keep]
    names = [names[j] for j in keep]
    groups = [groups[j] for j in keep]
    return DesignMatrix(names=names, groups=groups, raw=raw, y=y, split=split)


def evaluate_candidate(
    ds: MmmDataset,
    decomp: DecompositionResult | None,
    hv: HyperparameterVector,
    split: SplitPlan,
    studies: list[LiftStudy] | None = None,
    rssd_reference: dict[str, float] | None = None,
) -> FittedCandidate:
    """Run the full chain for one hyperparameter point.

    ``rssd_reference`` replaces spend shares as the Decomp.RSSD reference
    (used by model refresh to score stability against the previous model).
    """
    mask = ds.window_mask()
    channel_transforms = _transform_all(ds, hv)
    design = build_design(ds, decomp, channel_transforms, split)
    lam = regression.lambda_from_fraction(design, hv.lambda_hp)
    fit = regression.fit_ridge(design, lam)
    metrics = regression.score_fit(fit, design)

    contributions: dict[str, np.ndarray] = {}
    for j, name in enumerate(design.names):
        contributions[name] = fit.coef_data[j] * design.raw[:, j]

    immediate: dict[str, np.ndarray] = {}
    coef_by_name = dict(zip(design.names, fit.coef_data))
    for name, tc in channel_transforms.items():
        coef = coef_by_name.get(name, 0.0)
        immediate[name] = coef * tc.immediate_saturated[mask]

    paid = list(ds.roles.paid_media_spends)
    channel_effect = {c: float(contributions.get(c, np.zeros(1)).sum()) for c in paid}
    channel_spend = {c: float(ds.columns[c][mask].sum()) for c in paid}
    effect_total = sum(channel_effect.values())
    spend_total = sum(channel_spend.values())
    effect_shares = {
        c: (channel_effect[c] / effect_total if effect_total > 0 else 0.0) for c in paid
    }
    spend_shares = {c: channel_spend[c] / spend_total for c in paid}
    roi = {
        c: (channel_effect[c] / channel_spend[c] if channel_spend[c] > 0 else 0.0)
        for c in paid
    }

    reference = rssd_reference if rssd_reference is not None else spend_shares
    rssd = evaluation.decomp_rssd(effect_shares, reference)

    candidate = FittedCandidate(
        hv=hv,
        design=design,
        fit=fit,
        metrics=metrics,
        channel_transforms=channel_transforms,
        window_dates=[d for d, m in zip(ds.dates, mask) if m],
        contributions=contributions,
        immediate_contributions=immediate,
        baseline_intercept=fit.intercept_data,
        effect_shares=effect_shares,
        spend_shares=spend_shares,
        channel_effect=channel_effect,
        channel_spend=channel_spend,
        roi=roi,
        scores=ObjectiveScores(nrmse=metrics.nrmse_selection, decomp_rssd=rssd),
        lam=lam,
        dep_var_type=ds.roles.dep_var_type,
    )
    candidate._window_mask = mask
    candidate._raw_series = {name: ds.columns[name] for name in channel_transforms}
    if studies:
        candidate.scores.mape_lift = evaluation.mape_lift(candidate, studies)
    return candidate
