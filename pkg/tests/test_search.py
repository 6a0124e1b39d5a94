"""Search space decoding, differential evolution, Pareto ranking, clustering."""

import math

import numpy as np
import pytest

from mediamix import search as se
from mediamix.evaluation import ObjectiveRanges


def _geometric_space(channels=("a",)):
    return se.HyperparameterSpace(
        family="geometric",
        channels=list(channels),
        bounds={
            c: {"theta": (0.0, 0.8), "alpha": (0.5, 3.0), "gamma": (0.3, 1.0)}
            for c in channels
        },
        max_lag=13,
    )


def _fake_result(points, weights=(1.0, 1.0, 0.0), calibrated=False,
                 min_candidates=100, mapes=None):
    space = _geometric_space()
    archive = []
    ranges = ObjectiveRanges.empty()
    for i, (nrmse, rssd) in enumerate(points):
        cand = se.CandidateModel(
            id=f"1_1_{i + 1}",
            trial=1,
            generation=1,
            index=i + 1,
            vector=np.zeros(space.dim),
            failed=False,
            nrmse=float(nrmse),
            nrmse_train=float(nrmse),
            decomp_rssd=float(rssd),
            mape_lift=None if mapes is None else float(mapes[i]),
        )
        archive.append(cand)
        ranges.update(cand.scores)
    cfg = se.SearchConfig(
        iterations=32, trials=1, weights=weights, min_candidates=min_candidates
    )
    return se.SearchResult(
        archive=archive,
        space=space,
        config=cfg,
        ranges=ranges,
        calibrated=calibrated,
        dataset_fingerprint="sha256:0",
    )


def test_search_config_validation():
    with pytest.raises(se.SearchError):
        se.SearchConfig(iterations=10, population=32)
    with pytest.raises(se.SearchError):
        se.SearchConfig(trials=0)
    with pytest.raises(se.SearchError):
        se.SearchConfig(calibration_constraint=0.5)
    cfg = se.SearchConfig()
    assert se.SearchConfig.from_dict(cfg.to_dict()) == cfg


def test_space_defaults(small_ds, small_space):
    per = small_space.bounds[small_space.channels[0]]
    assert per["theta"] == (0.0, 0.8)
    assert per["alpha"] == (0.5, 3.0)
    assert per["gamma"] == (0.3, 1.0)
    assert small_space.max_lag == small_ds.n_in_window
    assert small_space.dim == 3 * len(small_space.channels) + 1
    wb = se.HyperparameterSpace.from_dataset(small_ds, family="weibull_cdf")
    per = wb.bounds[wb.channels[0]]
    assert per["shape"] == (0.0, 2.0) and per["scale"] == (0.0, 0.1)
    pdf = se.HyperparameterSpace.from_dataset(small_ds, family="weibull_pdf")
    assert pdf.bounds[pdf.channels[0]]["shape"] == (0.0001, 10.0)


def test_space_decode_affine():
    space = _geometric_space()
    hv = space.decode(np.array([0.5, 0.5, 0.5, 0.25]))
    p = hv.channels["a"]
    assert abs(p["theta"] - 0.4) < 1e-12
    assert abs(p["alpha"] - 1.75) < 1e-12
    assert abs(p["gamma"] - 0.65) < 1e-12
    assert abs(hv.lambda_hp - 0.25) < 1e-12
    assert hv.max_lag == 13


def test_space_decode_clamps():
    space = se.HyperparameterSpace(
        family="weibull_cdf",
        channels=["a"],
        bounds={"a": {"shape": (0.0, 2.0), "scale": (0.0, 0.1),
                      "alpha": (0.5, 3.0), "gamma": (0.3, 1.0)}},
        max_lag=13,
    )
    hv = space.decode(np.zeros(space.dim))
    assert hv.channels["a"]["shape"] == 1e-6
    assert hv.channels["a"]["scale"] == 1e-6
    wide = se.HyperparameterSpace(
        family="geometric",
        channels=["a"],
        bounds={"a": {"theta": (0.5, 1.0), "alpha": (0.5, 3.0), "gamma": (0.3, 1.0)}},
        max_lag=13,
    )
    hv = wide.decode(np.ones(wide.dim))
    assert hv.channels["a"]["theta"] < 1.0


def test_space_validation(small_ds):
    with pytest.raises(se.SearchError):
        se.HyperparameterSpace(
            family="geometric",
            channels=["a"],
            bounds={"a": {"theta": (0.5, 0.5)}},
            max_lag=13,
        )
    with pytest.raises(se.SearchError):
        se.HyperparameterSpace.from_dataset(small_ds, family="unknown")
    space = _geometric_space()
    with pytest.raises(se.SearchError):
        space.decode(np.zeros(2))


def test_space_round_trip():
    space = _geometric_space(channels=("a", "b"))
    back = se.HyperparameterSpace.from_dict(space.to_dict())
    assert back.bounds == space.bounds
    assert back.channels == space.channels
    assert back.lambda_bounds == space.lambda_bounds


def test_narrowed_bounds_example():
    space = _geometric_space()
    hv = space.decode(np.array([0.375, 0.5, 0.5, 0.5]))  # theta = 0.30
    narrowed = space.narrowed(hv)
    lo, hi = narrowed.bounds["a"]["theta"]
    assert abs(lo - 0.22) < 1e-12
    assert abs(hi - 0.38) < 1e-12


def test_narrowed_bounds_subset():
    space = _geometric_space(channels=("a", "b"))
    hv = space.decode(np.linspace(0.0, 1.0, space.dim))
    narrowed = space.narrowed(hv)
    for c in space.channels:
        for p, (lo, hi) in narrowed.bounds[c].items():
            olo, ohi = space.bounds[c][p]
            assert olo <= lo < hi <= ohi
    nlo, nhi = narrowed.lambda_bounds
    assert 0.0 <= nlo < nhi <= 1.0


def test_nondominated_fast_paths_match_generic():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        # Coarse grid values force plenty of exact ties.
        obj = rng.integers(0, 5, size=(n, 2)).astype(float)
        fast = se._nondominated_mask(obj)
        generic = np.ones(n, dtype=bool)
        for i in range(n):
            le = (obj <= obj[i]).all(axis=1)
            lt = (obj < obj[i]).any(axis=1)
            if (le & lt).any():
                generic[i] = False
        np.testing.assert_array_equal(fast, generic)
    one = rng.random((20, 1))
    np.testing.assert_array_equal(
        se._nondominated_mask(one), one[:, 0] == one[:, 0].min()
    )


def test_pareto_fronts_example():
    result = _fake_result([(1.0, 2.0), (2.0, 1.0), (2.0, 2.0)])
    se.pareto_fronts(result)
    fronts = [c.pareto_front for c in result.archive]
    assert fronts == [1, 1, 2]


def test_pareto_fronts_fill_min_candidates():
    # Strictly ordered points: each is its own front.
    points = [(float(i), float(i)) for i in range(10)]
    result = _fake_result(points, min_candidates=3)
    selected = se.pareto_fronts(result)
    assert len(selected) == 3
    assert [c.pareto_front for c in result.archive[:3]] == [1, 2, 3]
    assert all(c.pareto_front is None for c in result.archive[3:])


def test_pareto_fronts_brute_force_audit():
    rng = np.random.default_rng(1)
    points = [(float(a), float(b)) for a, b in rng.random((200, 2))]
    result = _fake_result(points, min_candidates=200)
    se.pareto_fronts(result)
    ranked = [c for c in result.archive if c.pareto_front is not None]
    for c in ranked:
        for d in ranked:
            if d.pareto_front >= c.pareto_front:
                dominates = (
                    d.nrmse <= c.nrmse
                    and d.decomp_rssd <= c.decomp_rssd
                    and (d.nrmse < c.nrmse or d.decomp_rssd < c.decomp_rssd)
                )
                assert not dominates


def test_pareto_calibration_filter():
    points = [(float(i), 1.0) for i in range(20)]
    mapes = [float(i) for i in range(20)]
    result = _fake_result(points, calibrated=True, mapes=mapes,
                          weights=(1.0, 1.0, 1.0))
    se.pareto_fronts(result)
    kept = [c for c in result.archive if c.pareto_front is not None]
    cutoff = np.quantile(np.array(mapes), 0.1)
    assert kept
    assert all(c.mape_lift <= cutoff for c in kept)


def test_selected_requires_pareto():
    result = _fake_result([(1.0, 2.0), (2.0, 1.0)])
    with pytest.raises(se.SearchError, match="pareto"):
        result.selected()
    se.pareto_fronts(result)
    assert result.selected().pareto_front == 1


def _run_small(small_ds, small_decomp, small_space, weights=(1.0, 0.0, 0.0),
               seed=3, iterations=64, trials=2):
    cfg = se.SearchConfig(
        iterations=iterations,
        trials=trials,
        seed=seed,
        weights=weights,
        min_candidates=10,
        clusters=False,
    )
    return se.run_search(small_ds, small_decomp, small_space, cfg, log=None)


def test_run_search_archive_and_ids(small_ds, small_decomp, small_space):
    result = _run_small(small_ds, small_decomp, small_space)
    assert len(result.archive) == 128
    ids = [c.id for c in result.archive]
    assert len(set(ids)) == len(ids)
    assert ids[0] == "1_1_1"
    assert not any(c.failed for c in result.archive)


def test_run_search_deterministic(small_ds, small_decomp, small_space):
    r1 = _run_small(small_ds, small_decomp, small_space)
    r2 = _run_small(small_ds, small_decomp, small_space)
    for a, b in zip(r1.archive, r2.archive):
        assert a.id == b.id
        np.testing.assert_array_equal(a.vector, b.vector)
        assert a.nrmse == b.nrmse
        assert a.decomp_rssd == b.decomp_rssd


def test_run_search_weight_argmin(small_ds, small_decomp, small_space):
    result = _run_small(small_ds, small_decomp, small_space)
    se.pareto_fronts(result)
    best = min(c.nrmse for c in result.archive)
    assert result.selected().nrmse == best
    assert result.best_by_nrmse().nrmse == best


def test_run_search_mape_weight_needs_studies(small_ds, small_decomp, small_space):
    cfg = se.SearchConfig(iterations=32, trials=1, weights=(1.0, 0.0, 1.0))
    with pytest.raises(se.SearchError, match="calibration"):
        se.run_search(small_ds, small_decomp, small_space, cfg, log=None)


def _fake_candidates(effs):
    out = []
    for i, eff in enumerate(effs):
        out.append(
            se.CandidateModel(
                id=f"1_1_{i}",
                trial=1,
                generation=1,
                index=i,
                vector=np.zeros(4),
                efficiency=dict(eff),
            )
        )
    return out


def test_cluster_identical_roi():
    cands = _fake_candidates([{"a": 2.0, "b": 1.0}] * 6)
    assert se.cluster_candidates(cands) == 1
    assert all(c.cluster == 1 for c in cands)


def test_cluster_two_blobs():
    rng = np.random.default_rng(0)
    blob1 = [{"a": 1.0 + rng.normal(0, 0.01), "b": 1.0} for _ in range(10)]
    blob2 = [{"a": 10.0 + rng.normal(0, 0.01), "b": 10.0} for _ in range(10)]
    cands = _fake_candidates(blob1 + blob2)
    assert se.cluster_candidates(cands) == 2
    first = {c.cluster for c in cands[:10]}
    second = {c.cluster for c in cands[10:]}
    assert len(first) == 1 and len(second) == 1 and first != second


def test_cluster_small_sets():
    cands = _fake_candidates([{"a": 1.0}, {"a": 2.0}, {"a": 3.0}])
    assert se.cluster_candidates(cands) == 1
    with pytest.raises(se.SearchError):
        se.cluster_candidates([])
