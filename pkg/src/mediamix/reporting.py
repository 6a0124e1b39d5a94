"""Per-candidate one-pager metrics and plots, model export/import, and run
artifacts."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import pipeline
from .allocator import ChannelCurve
from .dataset import MmmDataset, VariableRoles
from .decomposition import DecompositionConfig, decompose
from .pipeline import FittedCandidate, HyperparameterVector
from .svg import Canvas

SCHEMA_VERSION = 1
MODEL_FILE_PATTERN = "RobynModel-{id}.json"
RESCORE_TOL = 1e-9
BOOTSTRAP_RESAMPLES = 2000
MIN_BOOTSTRAP_CLUSTER = 5
RESPONSE_CURVE_POINTS = 41

PANEL_FILES = {
    "waterfall": "waterfall.svg",
    "actual_vs_predicted": "actual_vs_predicted.svg",
    "spend_vs_effect": "spend_vs_effect.svg",
    "bootstrapped_roi": "bootstrapped_roi.svg",
    "adstock_decay": "adstock_decay.svg",
    "immediate_vs_carryover": "immediate_vs_carryover.svg",
    "response_curves": "response_curves.svg",
    "fitted_vs_residual": "fitted_vs_residual.svg",
}


class ReportingError(ValueError):
    pass


def _fmt4(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


@dataclass
class OnePager:
    model_id: str
    nrmse: tuple
    adj_r2: tuple
    decomp_rssd: float
    mape_lift: float | None
    dep_var_type: str
    waterfall: list[tuple[str, float, float]]  # (name, contribution, share)
    spend_effect: list[dict]
    total_efficiency: float
    boot_roi: list[dict] | None
    adstock_curves: dict[str, list[float]]
    immediate_pct: dict[str, float]
    response_curves: dict[str, dict]
    dates: list
    actual: np.ndarray
    predicted: np.ndarray

    @property
    def header(self) -> str:
        n = self.nrmse
        r = self.adj_r2
        head = (
            f"NRMSE: train = {_fmt4(n[0])} | val = {_fmt4(n[1])} | test = {_fmt4(n[2])}; "
            f"[Adj. R2: train = {_fmt4(r[0])} | val = {_fmt4(r[1])} | test = {_fmt4(r[2])}]; "
            f"DECOMP.RSSD = {_fmt4(self.decomp_rssd)}"
        )
        if self.mape_lift is not None:
            head += f"; MAPE = {_fmt4(self.mape_lift)}"
        return head

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "header": self.header,
            "nrmse": {"train": self.nrmse[0], "val": self.nrmse[1], "test": self.nrmse[2]},
            "adj_r2": {
                "train": self.adj_r2[0],
                "val": self.adj_r2[1],
                "test": self.adj_r2[2],
            },
            "decomp_rssd": self.decomp_rssd,
            "mape_lift": self.mape_lift,
            "dep_var_type": self.dep_var_type,
            "waterfall": [
                {"name": n, "contribution": c, "share": s} for n, c, s in self.waterfall
            ],
            "spend_effect": self.spend_effect,
            "total_efficiency": self.total_efficiency,
            "bootstrapped_roi": self.boot_roi,
            "adstock_curves": self.adstock_curves,
            "immediate_pct": self.immediate_pct,
            "response_curves": self.response_curves,
            "actual": [float(v) for v in self.actual],
            "predicted": [float(v) for v in self.predicted],
            "dates": [d.isoformat() for d in self.dates],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def channel_curve(fc: FittedCandidate, channel: str) -> ChannelCurve:
    """Mean-spend response curve parameters for one paid channel."""
    tc = fc.channel_transforms[channel]
    coef = dict(zip(fc.design.names, fc.fit.coef_data)).get(channel, 0.0)
    mask = fc._window_mask
    mean_spend = float(fc._raw_series[channel][mask].mean())
    return ChannelCurve(
        name=channel,
        coef=float(coef),
        alpha=tc.saturation_params.alpha,
        inflection=tc.inflection,
        carryover_ratio=fc.carryover_ratio(channel),
        mean_spend=mean_spend,
    )


def build_onepager(
    fc: FittedCandidate,
    cluster_rois: list[dict] | None = None,
    adstock_curve_length: int = 13,
) -> OnePager:
    """Assemble the diagnostic metrics behind the eight one-pager panels.

    ``cluster_rois`` are the per-channel efficiency dicts of the candidate's
    cluster members (including itself); without them the bootstrapped-CI
    panel is omitted.
    """
    m = fc.metrics
    predicted = fc.predicted
    total = float(predicted.sum())
    waterfall = [("intercept", fc.baseline_intercept * len(predicted), 0.0)]
    for name in fc.design.names:
        waterfall.append((name, float(fc.contributions[name].sum()), 0.0))
    waterfall = [
        (name, contrib, contrib / total if total != 0 else 0.0)
        for name, contrib in ((n, c) for n, c, _ in waterfall)
    ]
    waterfall.sort(key=lambda t: -t[1])

    paid = sorted(fc.effect_shares)
    efficiency = fc.efficiency()
    spend_effect = [
        {
            "channel": c,
            "spend_share": fc.spend_shares[c],
            "effect_share": fc.effect_shares[c],
            "efficiency": efficiency[c],
        }
        for c in paid
    ]
    total_spend = sum(fc.channel_spend.values())
    total_effect = sum(fc.channel_effect.values())
    if fc.dep_var_type == "revenue":
        total_eff = total_effect / total_spend if total_spend > 0 else 0.0
    else:
        total_eff = total_spend / total_effect if total_effect > 0 else math.inf

    boot = None
    if cluster_rois is not None:
        boot = []
        rng = np.random.default_rng(0)
        for c in paid:
            values = np.array([r[c] for r in cluster_rois], dtype=float)
            values = values[np.isfinite(values)]
            if len(values) == 0:
                continue
            if len(values) < MIN_BOOTSTRAP_CLUSTER:
                boot.append(
                    {
                        "channel": c,
                        "mean": float(values.mean()),
                        "ci_low": float(values.min()),
                        "ci_high": float(values.max()),
                        "small_cluster": True,
                    }
                )
                continue
            means = np.array(
                [
                    values[rng.integers(0, len(values), len(values))].mean()
                    for _ in range(BOOTSTRAP_RESAMPLES)
                ]
            )
            boot.append(
                {
                    "channel": c,
                    "mean": float(values.mean()),
                    "ci_low": float(np.percentile(means, 2.5)),
                    "ci_high": float(np.percentile(means, 97.5)),
                    "small_cluster": False,
                }
            )

    adstock_curves = {}
    immediate_pct = {}
    response_curves = {}
    for c in paid:
        tc = fc.channel_transforms[c]
        adstock_curves[c] = [float(w) for w in tc.lag_weights[:adstock_curve_length]]
        total_c = fc.channel_effect[c]
        imm_c = float(fc.immediate_contributions[c].sum())
        immediate_pct[c] = 100.0 * imm_c / total_c if total_c > 0 else 100.0
        curve = channel_curve(fc, c)
        grid = np.linspace(0.0, 2.0 * max(curve.mean_spend, 1e-12), RESPONSE_CURVE_POINTS)
        response_curves[c] = {
            "spend": [float(v) for v in grid],
            "response": [curve.response(float(v)) for v in grid],
            "mean_spend": curve.mean_spend,
            "mean_response": curve.response(curve.mean_spend),
        }

    return OnePager(
        model_id=fc.id,
        nrmse=(m.nrmse_train, m.nrmse_val, m.nrmse_test),
        adj_r2=(m.adj_r2_train, m.adj_r2_val, m.adj_r2_test),
        decomp_rssd=fc.scores.decomp_rssd,
        mape_lift=fc.scores.mape_lift,
        dep_var_type=fc.dep_var_type,
        waterfall=waterfall,
        spend_effect=spend_effect,
        total_efficiency=total_eff,
        boot_roi=boot,
        adstock_curves=adstock_curves,
        immediate_pct=immediate_pct,
        response_curves=response_curves,
        dates=list(fc.window_dates),
        actual=fc.actual.copy(),
        predicted=predicted,
    )


# --- model export / import -------------------------------------------------


def roles_to_dict(roles: VariableRoles) -> dict:
    return {
        "dep_var": roles.dep_var,
        "dep_var_type": roles.dep_var_type,
        "paid_media_spends": list(roles.paid_media_spends),
        "paid_media_vars": list(roles.paid_media_vars),
        "organic_vars": list(roles.organic_vars),
        "context_vars": list(roles.context_vars),
        "factor_vars": list(roles.factor_vars),
        "prophet_vars": list(roles.prophet_vars),
        "prophet_country": roles.prophet_country,
    }


def roles_from_doc(doc: dict) -> VariableRoles:
    r = doc["roles"]
    return VariableRoles(
        dep_var=r["dep_var"],
        dep_var_type=r["dep_var_type"],
        paid_media_spends=tuple(r["paid_media_spends"]),
        paid_media_vars=tuple(r["paid_media_vars"]),
        organic_vars=tuple(r["organic_vars"]),
        context_vars=tuple(r["context_vars"]),
        factor_vars=tuple(r["factor_vars"]),
        prophet_vars=tuple(r["prophet_vars"]),
        prophet_country=r["prophet_country"],
    )


def export_model(
    fc: FittedCandidate,
    ds: MmmDataset,
    space,
    search_cfg,
    decomp_cfg: DecompositionConfig | None,
    rssd_reference: dict | None = None,
) -> dict:
    """Self-contained, schema-versioned model document.

    ``rssd_reference`` records the effect-share reference that Decomp.RSSD
    was computed against when it is not the dataset spend shares (refresh).
    """
    transforms_doc = {}
    for name, tc in fc.channel_transforms.items():
        mask = fc._window_mask
        transforms_doc[name] = {
            "alpha": tc.saturation_params.alpha,
            "gamma": tc.saturation_params.gamma,
            "inflection": tc.inflection,
            "carryover_ratio": fc.carryover_ratio(name),
            "mean_spend": float(fc._raw_series[name][mask].mean()),
            "total_spend": float(fc._raw_series[name][mask].sum()),
            "lag_weights": [float(w) for w in tc.lag_weights[: space.max_lag]],
        }
    metrics = fc.metrics
    return {
        "schema_version": SCHEMA_VERSION,
        "model_id": fc.id,
        "dataset_fingerprint": ds.fingerprint(),
        "frequency": ds.frequency,
        "window": [ds.window_start.isoformat(), ds.window_end.isoformat()],
        "roles": roles_to_dict(ds.roles),
        "hyperparameters": fc.hv.to_dict(),
        "lambda_value": fc.lam,
        "coefficients": {
            "standardized": dict(zip(fc.design.names, map(float, fc.fit.coef_std))),
            "data_units": dict(zip(fc.design.names, map(float, fc.fit.coef_data))),
            "intercept_standardized": fc.fit.intercept_std,
            "intercept_data_units": fc.fit.intercept_data,
        },
        "standardization": {
            name: {"mean": float(mu), "sd": float(sd)}
            for name, mu, sd in zip(fc.design.names, fc.design.means, fc.design.sds)
        },
        "transforms": transforms_doc,
        "scores": {
            "nrmse_train": metrics.nrmse_train,
            "nrmse_val": metrics.nrmse_val,
            "nrmse_test": metrics.nrmse_test,
            "adj_r2_train": metrics.adj_r2_train,
            "adj_r2_val": metrics.adj_r2_val,
            "adj_r2_test": metrics.adj_r2_test,
            "decomp_rssd": fc.scores.decomp_rssd,
            "mape_lift": fc.scores.mape_lift,
        },
        "effect_shares": dict(fc.effect_shares),
        "spend_shares": dict(fc.spend_shares),
        "roi": dict(fc.roi),
        "dep_var_type": fc.dep_var_type,
        "rssd_reference": dict(rssd_reference) if rssd_reference else None,
        "space": space.to_dict(),
        "search": search_cfg.to_dict(),
        "decomposition": decomp_cfg.to_dict()
        if decomp_cfg is not None
        else {"components": []},
    }


def write_model(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def model_filename(model_id: str) -> str:
    return MODEL_FILE_PATTERN.format(id=model_id)


def import_model(
    path,
    ds: MmmDataset,
    holidays=None,
    override_fingerprint: bool = False,
) -> tuple[dict, FittedCandidate]:
    """Load a model document and re-score it against the dataset.

    The stored scores must reproduce within 1e-9 unless the dataset
    fingerprint check is explicitly overridden.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ReportingError(f"corrupt model file {path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ReportingError(
            f"unsupported schema version {doc.get('schema_version')!r}"
        )
    if doc["dataset_fingerprint"] != ds.fingerprint():
        if not override_fingerprint:
            raise ReportingError(
                "dataset fingerprint mismatch: model was exported for different data"
            )
    dcfg = DecompositionConfig.from_dict(doc["decomposition"])
    decomp = decompose(ds, holidays, dcfg) if dcfg.components else None
    hv = HyperparameterVector.from_dict(doc["hyperparameters"])
    from .search import SearchConfig

    split = SearchConfig.from_dict(doc["search"]).split
    fc = pipeline.evaluate_candidate(
        ds, decomp, hv, split, rssd_reference=doc.get("rssd_reference")
    )
    fc.id = doc["model_id"]
    if not override_fingerprint:
        stored = doc["scores"]
        checks = [
            (stored["nrmse_train"], fc.metrics.nrmse_train),
            (stored["nrmse_val"], fc.metrics.nrmse_val),
            (stored["nrmse_test"], fc.metrics.nrmse_test),
            (stored["decomp_rssd"], fc.scores.decomp_rssd),
        ]
        for want, got in checks:
            if want is None and got is None:
                continue
            if want is None or got is None or abs(want - got) > RESCORE_TOL:
                raise ReportingError(
                    f"re-scored metrics deviate from stored values: {want} vs {got}"
                )
    return doc, fc


# --- plots -----------------------------------------------------------------

PANEL_W = 560
PANEL_H = 300


def _panel(title: str) -> Canvas:
    c = Canvas(PANEL_W, PANEL_H)
    c.text(10, 18, title, size=12, bold=True)
    return c


def _plot_waterfall(op: OnePager) -> Canvas:
    c = _panel("Response Decomposition Waterfall by Predictor")
    rows = op.waterfall
    top = 40
    row_h = min(24.0, (PANEL_H - top - 10) / max(len(rows), 1))
    max_abs = max(abs(v) for _, v, _ in rows) or 1.0
    x0 = 180
    span = PANEL_W - x0 - 80
    for i, (name, contrib, share) in enumerate(rows):
        y = top + i * row_h
        w = abs(contrib) / max_abs * span
        fill = "#4c78a8" if contrib >= 0 else "#e45756"
        c.text(x0 - 6, y + row_h * 0.7, name, size=10, anchor="end")
        c.rect(x0, y + 2, w, row_h - 4, fill=fill)
        c.text(x0 + w + 4, y + row_h * 0.7, f"{share * 100:.1f}%", size=10)
    return c


def _plot_series(op: OnePager) -> Canvas:
    c = _panel("Actual vs. Predicted Response")
    return _series_panel(c, op.actual, op.predicted)


def _series_panel(c: Canvas, actual, predicted) -> Canvas:
    lo = float(min(actual.min(), predicted.min()))
    hi = float(max(actual.max(), predicted.max()))
    span = (hi - lo) or 1.0
    x0, y0, w, h = 40, 40, PANEL_W - 60, PANEL_H - 60

    def pts(series):
        n = len(series)
        return [
            (x0 + i / max(n - 1, 1) * w, y0 + h - (v - lo) / span * h)
            for i, v in enumerate(series)
        ]

    c.polyline(pts(actual), stroke="#4c78a8")
    c.polyline(pts(predicted), stroke="#f58518")
    c.text(x0, PANEL_H - 6, "actual", size=10, fill="#4c78a8")
    c.text(x0 + 80, PANEL_H - 6, "predicted", size=10, fill="#f58518")
    return c


def _plot_spend_effect(op: OnePager) -> Canvas:
    c = _panel("Share of Spend VS Share of Effect with total ROI")
    label = "ROI" if op.dep_var_type == "revenue" else "CPA"
    c.text(10, 34, f"total {label} = {op.total_efficiency:.4f}", size=10)
    top = 50
    rows = op.spend_effect
    row_h = min(36.0, (PANEL_H - top - 10) / max(len(rows), 1))
    x0 = 140
    span = PANEL_W - x0 - 90
    for i, row in enumerate(rows):
        y = top + i * row_h
        c.text(x0 - 6, y + row_h * 0.6, row["channel"], size=10, anchor="end")
        c.rect(x0, y + 2, row["spend_share"] * span, row_h * 0.4 - 3, fill="#9ecae9")
        c.rect(
            x0,
            y + row_h * 0.4 + 2,
            row["effect_share"] * span,
            row_h * 0.4 - 3,
            fill="#4c78a8",
        )
        c.text(
            x0 + span + 6,
            y + row_h * 0.6,
            f"{label} {row['efficiency']:.2f}",
            size=10,
        )
    return c


def _plot_boot_roi(op: OnePager) -> Canvas:
    c = _panel("In-cluster bootstrapped ROI with 95% CI & mean")
    rows = op.boot_roi or []
    top = 44
    row_h = min(30.0, (PANEL_H - top - 10) / max(len(rows), 1))
    finite_hi = [r["ci_high"] for r in rows if math.isfinite(r["ci_high"])]
    hi = max(finite_hi, default=1.0) or 1.0
    x0 = 140
    span = PANEL_W - x0 - 60
    for i, row in enumerate(rows):
        y = top + i * row_h + row_h / 2
        c.text(x0 - 6, y + 4, row["channel"], size=10, anchor="end")
        lo_x = x0 + min(row["ci_low"] / hi, 1.0) * span
        hi_x = x0 + min(row["ci_high"] / hi, 1.0) * span
        mean_x = x0 + min(row["mean"] / hi, 1.0) * span
        c.line(lo_x, y, hi_x, y, stroke="#4c78a8", width=2)
        c.circle(mean_x, y, 4, fill="#f58518")
        if row.get("small_cluster"):
            c.text(hi_x + 6, y + 4, "min/max (small cluster)", size=9, fill="#888888")
    return c


def _plot_adstock(op: OnePager) -> Canvas:
    c = _panel("Adstock Decay by Channel (lag weights)")
    x0, y0, w, h = 50, 40, PANEL_W - 80, PANEL_H - 70
    palette = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"]
    for i, (name, weights) in enumerate(sorted(op.adstock_curves.items())):
        color = palette[i % len(palette)]
        n = len(weights)
        pts = [
            (x0 + j / max(n - 1, 1) * w, y0 + h - min(max(v, 0.0), 1.0) * h)
            for j, v in enumerate(weights)
        ]
        c.polyline(pts, stroke=color)
        c.text(x0 + w + 4, y0 + 12 + i * 14, name, size=9, fill=color)
    return c


def _plot_immediate(op: OnePager) -> Canvas:
    c = _panel("Immediate vs. Carryover Response Percentage")
    top = 44
    rows = sorted(op.immediate_pct.items())
    row_h = min(30.0, (PANEL_H - top - 10) / max(len(rows), 1))
    x0 = 140
    span = PANEL_W - x0 - 120
    for i, (name, pct) in enumerate(rows):
        y = top + i * row_h
        c.text(x0 - 6, y + row_h * 0.65, name, size=10, anchor="end")
        c.rect(x0, y + 3, pct / 100.0 * span, row_h - 6, fill="#4c78a8")
        c.rect(
            x0 + pct / 100.0 * span,
            y + 3,
            (1.0 - pct / 100.0) * span,
            row_h - 6,
            fill="#f58518",
        )
        c.text(
            x0 + span + 6,
            y + row_h * 0.65,
            f"{pct:.1f}% / {100 - pct:.1f}%",
            size=10,
        )
    return c


def _plot_response_curves(op: OnePager) -> Canvas:
    c = _panel("Response Curves and Mean Spends by Channel")
    x0, y0, w, h = 50, 40, PANEL_W - 80, PANEL_H - 70
    palette = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"]
    max_spend = max(
        (max(rc["spend"]) for rc in op.response_curves.values()), default=1.0
    ) or 1.0
    max_resp = max(
        (max(rc["response"]) for rc in op.response_curves.values()), default=1.0
    ) or 1.0
    for i, (name, rc) in enumerate(sorted(op.response_curves.items())):
        color = palette[i % len(palette)]
        pts = [
            (x0 + s / max_spend * w, y0 + h - r / max_resp * h)
            for s, r in zip(rc["spend"], rc["response"])
        ]
        c.polyline(pts, stroke=color)
        c.circle(
            x0 + rc["mean_spend"] / max_spend * w,
            y0 + h - rc["mean_response"] / max_resp * h,
            4,
            fill=color,
        )
        c.text(x0 + w + 4, y0 + 12 + i * 14, name, size=9, fill=color)
    return c


def _plot_residuals(op: OnePager) -> Canvas:
    c = _panel("Fitted vs. Residual")
    x0, y0, w, h = 50, 40, PANEL_W - 80, PANEL_H - 70
    fitted = op.predicted
    resid = op.actual - op.predicted
    f_lo, f_hi = float(fitted.min()), float(fitted.max())
    f_span = (f_hi - f_lo) or 1.0
    r_max = float(np.abs(resid).max()) or 1.0
    c.line(x0, y0 + h / 2, x0 + w, y0 + h / 2, stroke="#aaaaaa", dash="4 3")
    for f, r in zip(fitted, resid):
        c.circle(
            x0 + (f - f_lo) / f_span * w,
            y0 + h / 2 - r / r_max * (h / 2 - 4),
            2,
            fill="#4c78a8",
        )
    return c


def render_allocation(plan, path) -> None:
    """Two-panel SVG: before/after mean spends and predicted response."""
    width, height = 2 * PANEL_W, PANEL_H
    c = Canvas(width, height)
    left = _panel("Budget Allocation: Mean Spend Before vs After")
    rows = list(zip(plan.channels, plan.previous_spend, plan.spend))
    top = 44
    row_h = min(36.0, (PANEL_H - top - 10) / max(len(rows), 1))
    x0 = 140
    span = PANEL_W - x0 - 100
    max_spend = max((max(b, a) for _, b, a in rows), default=1.0) or 1.0
    for i, (name, before, after) in enumerate(rows):
        y = top + i * row_h
        left.text(x0 - 6, y + row_h * 0.6, name, size=10, anchor="end")
        left.rect(x0, y + 2, before / max_spend * span, row_h * 0.4 - 3, fill="#9ecae9")
        left.rect(
            x0,
            y + row_h * 0.4 + 2,
            after / max_spend * span,
            row_h * 0.4 - 3,
            fill="#4c78a8",
        )
        left.text(x0 + span + 6, y + row_h * 0.6, f"{after:,.0f}", size=10)
    right = _panel("Predicted Response by Channel")
    max_resp = max(plan.response, default=1.0) or 1.0
    for i, (name, resp) in enumerate(zip(plan.channels, plan.response)):
        y = top + i * row_h
        right.text(x0 - 6, y + row_h * 0.6, name, size=10, anchor="end")
        right.rect(x0, y + 2, resp / max_resp * span, row_h - 6, fill="#54a24b")
        right.text(x0 + span + 6, y + row_h * 0.6, f"{resp:,.0f}", size=10)
    c.group(left, 0, 0)
    c.group(right, PANEL_W, 0)
    c.save(path)


def render_plots(op: OnePager, out_dir) -> list[str]:
    """One deterministic SVG per panel plus a combined page; rendering the
    same one-pager twice produces byte-identical files."""
    os.makedirs(out_dir, exist_ok=True)
    panels = {
        "waterfall": _plot_waterfall(op),
        "actual_vs_predicted": _plot_series(op),
        "spend_vs_effect": _plot_spend_effect(op),
        "adstock_decay": _plot_adstock(op),
        "immediate_vs_carryover": _plot_immediate(op),
        "response_curves": _plot_response_curves(op),
        "fitted_vs_residual": _plot_residuals(op),
    }
    if op.boot_roi is not None:
        panels["bootstrapped_roi"] = _plot_boot_roi(op)
    written = []
    for key in PANEL_FILES:
        if key not in panels:
            continue
        path = os.path.join(out_dir, PANEL_FILES[key])
        panels[key].save(path)
        written.append(path)

    ordered = [k for k in PANEL_FILES if k in panels]
    n_cols = 2
    n_rows = (len(ordered) + n_cols - 1) // n_cols
    combined = Canvas(n_cols * PANEL_W, n_rows * PANEL_H + 30)
    combined.text(10, 20, f"One-pager for Model ID: {op.model_id}", size=13, bold=True)
    combined.text(320, 20, op.header, size=9)
    for i, key in enumerate(ordered):
        combined.group(panels[key], (i % n_cols) * PANEL_W, 30 + (i // n_cols) * PANEL_H)
    path = os.path.join(out_dir, "onepager.svg")
    combined.save(path)
    written.append(path)
    return written
