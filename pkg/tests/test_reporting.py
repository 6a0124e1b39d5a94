"""One-pager metrics, model export/import, deterministic SVG rendering."""

import json

import numpy as np
import pytest

from mediamix import allocator as al
from mediamix import reporting as rp
from mediamix import simulator
from mediamix.decomposition import DecompositionConfig
from mediamix.pipeline import HyperparameterVector, evaluate_candidate
from mediamix.regression import SplitPlan
from mediamix.search import SearchConfig

DCFG = DecompositionConfig(
    components=("trend", "season"), yearly_fourier_order=2, n_changepoints=2
)
SCFG = SearchConfig(iterations=32, trials=1)


def test_header_format(small_candidate):
    op = rp.build_onepager(small_candidate)
    m = small_candidate.metrics
    want = (
        f"NRMSE: train = {m.nrmse_train:.4f} | val = {m.nrmse_val:.4f} | "
        f"test = {m.nrmse_test:.4f}; "
        f"[Adj. R2: train = {m.adj_r2_train:.4f} | val = {m.adj_r2_val:.4f} | "
        f"test = {m.adj_r2_test:.4f}]; "
        f"DECOMP.RSSD = {small_candidate.scores.decomp_rssd:.4f}"
    )
    assert op.header == want
    op.mape_lift = 0.125
    assert op.header.endswith("; MAPE = 0.1250")


def test_header_handles_missing_splits(small_candidate):
    op = rp.build_onepager(small_candidate)
    op.nrmse = (0.1, None, None)
    assert "val = n/a" in op.header


def test_waterfall_shares(small_candidate):
    op = rp.build_onepager(small_candidate)
    assert abs(sum(s for _, _, s in op.waterfall) - 1.0) < 1e-9
    contribs = [c for _, c, _ in op.waterfall]
    assert contribs == sorted(contribs, reverse=True)
    names = [n for n, _, _ in op.waterfall]
    assert "intercept" in names


def test_immediate_pct_bounds(small_candidate):
    op = rp.build_onepager(small_candidate)
    for pct in op.immediate_pct.values():
        assert 0.0 <= pct <= 100.0


def test_no_carryover_is_all_immediate(small_ds, small_decomp, small_space):
    channels = {
        c: {"theta": 0.0, "alpha": 1.0, "gamma": 0.5} for c in small_space.channels
    }
    hv = HyperparameterVector(
        family="geometric", channels=channels, lambda_hp=0.2,
        max_lag=small_space.max_lag,
    )
    fc = evaluate_candidate(small_ds, small_decomp, hv, SplitPlan())
    fc.id = "1_1_9"
    op = rp.build_onepager(fc)
    for pct in op.immediate_pct.values():
        assert abs(pct - 100.0) < 1e-9


def test_response_curve_matches_allocator(small_candidate, small_ds, small_space):
    doc = rp.export_model(small_candidate, small_ds, small_space, SCFG, DCFG)
    op = rp.build_onepager(small_candidate)
    for c, rc in op.response_curves.items():
        for s, r in zip(rc["spend"], rc["response"]):
            assert abs(al.channel_response(doc, c, s) - r) < 1e-9


def test_actual_vs_predicted_is_score_path(small_candidate):
    op = rp.build_onepager(small_candidate)
    np.testing.assert_array_equal(op.predicted, small_candidate.predicted)
    np.testing.assert_array_equal(op.actual, small_candidate.actual)
    assert len(op.dates) == len(op.actual)


def test_bootstrap_ci(small_candidate):
    rois = [
        {c: 2.0 + 0.1 * i for c in small_candidate.roi} for i in range(20)
    ]
    op = rp.build_onepager(small_candidate, cluster_rois=rois)
    for row in op.boot_roi:
        assert row["ci_low"] <= row["mean"] <= row["ci_high"]
        assert not row["small_cluster"]


def test_bootstrap_small_cluster_flag(small_candidate):
    rois = [{c: 1.0 + i for c in small_candidate.roi} for i in range(3)]
    op = rp.build_onepager(small_candidate, cluster_rois=rois)
    for row in op.boot_roi:
        assert row["small_cluster"]
        assert row["ci_low"] == 1.0 and row["ci_high"] == 3.0


def test_export_import_round_trip(tmp_path, small_ds, small_space, small_candidate):
    doc = rp.export_model(small_candidate, small_ds, small_space, SCFG, DCFG)
    path = tmp_path / rp.model_filename(small_candidate.id)
    assert path.name == "RobynModel-1_1_1.json"
    rp.write_model(doc, path)

    doc2, fc2 = rp.import_model(path, small_ds)
    assert doc2 == doc
    assert abs(fc2.metrics.nrmse_train - small_candidate.metrics.nrmse_train) < 1e-9
    assert abs(fc2.scores.decomp_rssd - small_candidate.scores.decomp_rssd) < 1e-9

    # export(import(export)) is byte-identical
    path2 = tmp_path / "again.json"
    rp.write_model(rp.export_model(fc2, small_ds, small_space, SCFG, DCFG), path2)
    assert path.read_bytes() == path2.read_bytes()


def test_import_fingerprint_guard(tmp_path, small_ds, small_space, small_candidate):
    doc = rp.export_model(small_candidate, small_ds, small_space, SCFG, DCFG)
    path = tmp_path / "model.json"
    rp.write_model(doc, path)
    other, _ = simulator.simulate(n_periods=104, n_channels=2, seed=9)
    with pytest.raises(rp.ReportingError, match="fingerprint"):
        rp.import_model(path, other)
    doc2, _ = rp.import_model(path, other, override_fingerprint=True)
    assert doc2["model_id"] == small_candidate.id


def test_import_corrupt_and_unknown_schema(tmp_path, small_ds):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(rp.ReportingError, match="corrupt"):
        rp.import_model(bad, small_ds)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"schema_version": 99}), encoding="utf-8")
    with pytest.raises(rp.ReportingError, match="schema"):
        rp.import_model(wrong, small_ds)


def test_render_plots_eight_panels(tmp_path, small_candidate):
    rois = [{c: 2.0 + 0.1 * i for c in small_candidate.roi} for i in range(8)]
    op = rp.build_onepager(small_candidate, cluster_rois=rois)
    written = rp.render_plots(op, tmp_path / "pages")
    names = sorted(p.split("/")[-1] for p in written)
    assert sorted([*rp.PANEL_FILES.values(), "onepager.svg"]) == names
    assert len(rp.PANEL_FILES) == 8


def test_render_plots_deterministic(tmp_path, small_candidate):
    op = rp.build_onepager(small_candidate)
    first = rp.render_plots(op, tmp_path / "one")
    second = rp.render_plots(op, tmp_path / "two")
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_render_plots_without_clusters(tmp_path, small_candidate):
    op = rp.build_onepager(small_candidate)
    written = rp.render_plots(op, tmp_path / "pages")
    names = [p.split("/")[-1] for p in written]
    assert "bootstrapped_roi.svg" not in names
    assert "onepager.svg" in names


def test_render_allocation(tmp_path):
    curve = al.ChannelCurve(
        name="a", coef=100.0, alpha=1.0, inflection=5.0,
        carryover_ratio=1.0, mean_spend=10.0,
    )
    plan = al.allocate_max_response(al.AllocationProblem(curves=[curve]))
    path = tmp_path / "alloc.svg"
    rp.render_allocation(plan, path)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("<svg") or "<svg" in text


def test_onepager_json(tmp_path, small_candidate):
    op = rp.build_onepager(small_candidate)
    path = tmp_path / "metrics.json"
    op.save_json(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["model_id"] == small_candidate.id
    assert data["header"] == op.header
