"""Acceptance gate: end-to-end correctness and recovery requirements.

Each test prints one PASS line on success; together they exercise the
transform oracles, the ridge solver, ground-truth ROAS recovery,
calibration and effect-share regularization, Pareto ranking, the budget
allocator, serialization round trips, and the CLI workflow.
"""

import copy
import datetime as dt
import json
import math
import time

import numpy as np
import pytest

from mediamix import allocator as al
from mediamix import cli, simulator
from mediamix import transforms as tr
from mediamix.dataset import load_dataset
from mediamix.decomposition import DecompositionConfig, decompose
from mediamix.evaluation import ObjectiveRanges
from mediamix.kernels import ridge_cd
from mediamix.pipeline import evaluate_candidate
from mediamix.regression import SplitPlan
from mediamix.reporting import (
    PANEL_FILES,
    export_model,
    import_model,
    model_filename,
    write_model,
)
from mediamix.search import (
    HyperparameterSpace,
    SearchConfig,
    SearchResult,
    pareto_fronts,
    run_search,
)

SEEDS = range(5)
RECOVERY_CFG = DecompositionConfig(
    components=("trend", "season"), yearly_fourier_order=1, n_changepoints=1
)


def _simulate(seed):
    ds, truth = simulator.simulate(n_periods=208, seed=seed)
    decomp = decompose(ds, None, RECOVERY_CFG)
    space = HyperparameterSpace.from_dataset(ds)
    studies = simulator.cut_lift_studies(truth, n_studies=3)
    return ds, truth, decomp, space, studies


@pytest.fixture(scope="module")
def sims():
    return {seed: _simulate(seed) for seed in SEEDS}


def _search(sims, seed, weights, with_studies=False):
    ds, _, decomp, space, studies = sims[seed]
    cfg = SearchConfig(iterations=2000, trials=5, seed=seed, weights=weights)
    result = run_search(
        ds, decomp, space, cfg,
        studies=studies if with_studies else None, log=None,
    )
    pareto_fronts(result)
    return result


@pytest.fixture(scope="module")
def base_searches(sims):
    t0 = time.monotonic()
    out = {seed: _search(sims, seed, (1.0, 0.0, 0.0)) for seed in SEEDS}
    return out, time.monotonic() - t0


@pytest.fixture(scope="module")
def calib_searches(sims):
    return {seed: _search(sims, seed, (1.0, 0.0, 1.0), with_studies=True)
            for seed in SEEDS}


@pytest.fixture(scope="module")
def rssd_searches(sims):
    return {seed: _search(sims, seed, (1.0, 1.0, 0.0)) for seed in SEEDS}


def test_criterion_1_transform_oracles():
    out = tr.adstock_geometric(np.array([100.0, 0.0, 0.0, 0.0]), 0.5)
    np.testing.assert_array_equal(out, [100.0, 50.0, 25.0, 12.5])

    theta, h = 0.8, 7.0
    impulse = np.zeros(200)
    impulse[0] = h
    mass = float(tr.adstock_geometric(impulse, theta).sum())
    assert abs(mass - h / (1.0 - theta)) < 1e-9

    assert abs(float(tr.hill(3.7, 2.2, 3.7)) - 0.5) < 1e-12

    w = tr.weibull_lag_weights("weibull_cdf", 2.0, 0.05, 200)
    assert w[0] == 1.0
    print("criterion 1 (transform oracles): PASS")


def test_criterion_2_ridge_solver():
    rng = np.random.default_rng(0)
    t0 = time.monotonic()
    for _ in range(100):
        Z = rng.normal(size=(20, 5))
        y = rng.normal(size=20)
        lam = float(rng.uniform(0.1, 10.0))
        beta, _, converged = ridge_cd(
            Z, y, lam, np.zeros(5, dtype=np.uint8), 5000, 1e-12
        )
        beta = np.asarray(beta)
        assert converged
        exact = np.linalg.solve(Z.T @ Z + lam * np.eye(5), Z.T @ y)
        np.testing.assert_allclose(beta, exact, atol=1e-6)

        nonneg = np.ones(5, dtype=np.uint8)
        beta, _, _ = ridge_cd(Z, y, lam, nonneg, 5000, 1e-12)
        beta = np.asarray(beta)
        grad = 2.0 * (Z.T @ (Z @ beta - y) + lam * beta)
        for j in range(5):
            if beta[j] > 1e-12:
                assert abs(grad[j]) < 1e-6
            else:
                assert grad[j] >= -1e-6
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0
    print(f"criterion 2 (ridge vs normal equations, KKT, {elapsed:.2f}s): PASS")


def test_criterion_3_roas_recovery(sims, base_searches):
    searches, elapsed = base_searches
    assert elapsed < 600.0
    errors = {}
    for seed in SEEDS:
        _, truth, _, _, _ = sims[seed]
        best = searches[seed].best_by_nrmse()
        for c, true_roas in truth.roas.items():
            if truth.spend_shares[c] < 0.10:
                continue
            rel = abs(best.efficiency[c] - true_roas) / true_roas
            errors.setdefault(c, []).append(rel)
    assert errors
    for c, rels in errors.items():
        med = float(np.median(rels))
        assert med <= 0.30, f"{c}: median ROAS error {med:.3f}"
    print(
        "criterion 3 (ROAS recovery, medians "
        + ", ".join(f"{c}={np.median(v):.3f}" for c, v in sorted(errors.items()))
        + f", {elapsed:.0f}s): PASS"
    )


def test_criterion_4_calibration_improves_mape(sims, base_searches, calib_searches):
    base, _ = base_searches
    wins = 0
    for seed in SEEDS:
        ds, _, decomp, space, studies = sims[seed]
        calibrated_mape = calib_searches[seed].selected().mape_lift
        best = base[seed].best_by_nrmse()
        fc = evaluate_candidate(
            ds, decomp, space.decode(best.vector), SplitPlan(), studies=studies
        )
        if calibrated_mape < fc.scores.mape_lift:
            wins += 1
    assert wins >= 4
    print(f"criterion 4 (calibration lowers lift MAPE, {wins}/5 seeds): PASS")


def test_criterion_5_rssd_objective_lowers_rssd(base_searches, rssd_searches):
    base, _ = base_searches
    for seed in SEEDS:
        with_rssd = rssd_searches[seed].selected().decomp_rssd
        without = base[seed].selected().decomp_rssd
        assert with_rssd <= without + 1e-12, f"seed {seed}"
    print("criterion 5 (RSSD weight never increases RSSD, 5/5 seeds): PASS")


def _peel_fronts(points):
    n = len(points)
    fronts = np.zeros(n, dtype=int)
    remaining = list(range(n))
    front = 0
    while remaining:
        front += 1
        nd = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if j == i:
                    continue
                if (
                    points[j][0] <= points[i][0]
                    and points[j][1] <= points[i][1]
                    and (points[j][0] < points[i][0] or points[j][1] < points[i][1])
                ):
                    dominated = True
                    break
            if not dominated:
                nd.append(i)
        for i in nd:
            fronts[i] = front
        remaining = [i for i in remaining if i not in set(nd)]
    return fronts


def test_criterion_6_pareto_brute_force_audit(base_searches):
    base, _ = base_searches
    source = base[0]
    candidates = [copy.copy(c) for c in source.archive[:500]]
    for c in candidates:
        c.pareto_front = None
    ranges = ObjectiveRanges.empty()
    for c in candidates:
        ranges.update(c.scores)
    cfg = SearchConfig(
        iterations=2000, trials=5, weights=(1.0, 1.0, 0.0), min_candidates=500
    )
    result = SearchResult(
        archive=candidates,
        space=source.space,
        config=cfg,
        ranges=ranges,
        calibrated=False,
        dataset_fingerprint=source.dataset_fingerprint,
    )
    pareto_fronts(result)
    want = _peel_fronts([(c.nrmse, c.decomp_rssd) for c in candidates])
    got = np.array([c.pareto_front for c in candidates])
    violations = int((want != got).sum())
    assert violations == 0
    print("criterion 6 (Pareto fronts match brute-force peeling, 500 candidates, "
          "0 violations): PASS")


def test_criterion_7_allocator():
    t0 = time.monotonic()
    curves = [
        al.ChannelCurve(name="a", coef=900.0, alpha=0.9, inflection=60.0,
                        carryover_ratio=1.2, mean_spend=100.0),
        al.ChannelCurve(name="b", coef=500.0, alpha=0.8, inflection=30.0,
                        carryover_ratio=1.0, mean_spend=70.0),
    ]
    problem = al.AllocationProblem(
        curves=curves,
        constr_low=np.array([0.3, 0.3]),
        constr_up=np.array([2.0, 2.0]),
    )
    plan = al.allocate_max_response(problem)
    budget = 170.0
    assert abs(plan.spend.sum() - budget) <= 1e-9 * budget

    tol = 1e-7 * (problem.upper - problem.lower)
    interior = (plan.spend > problem.lower + tol) & (plan.spend < problem.upper - tol)
    if interior.sum() >= 2:
        g = np.array([c.marginal(m) for c, m in zip(curves, plan.spend)])[interior]
        assert g.max() - g.min() < 1e-4

    # Million-point random oracle on the budget line.
    rng = np.random.default_rng(0)
    a = rng.uniform(problem.lower[0], problem.upper[0], size=1_000_000)
    b = budget - a
    ok = (b >= problem.lower[1]) & (b <= problem.upper[1])

    def vec_response(curve, m):
        v = curve.carryover_ratio * m
        va = v**curve.alpha
        return curve.coef * va / (va + curve.inflection**curve.alpha)

    oracle = (vec_response(curves[0], a[ok]) + vec_response(curves[1], b[ok])).max()
    assert plan.total_response >= oracle * (1.0 - 1e-6)

    coef, c, k, target = 1000.0, 50.0, 1.0, 4.0
    tcurve = al.ChannelCurve(name="t", coef=coef, alpha=1.0, inflection=c,
                             carryover_ratio=k, mean_spend=100.0)
    tproblem = al.AllocationProblem(
        curves=[tcurve],
        scenario=al.TARGET_EFFICIENCY,
        target_value=target,
        constr_low=np.array([0.01]),
        constr_up=np.array([5.0]),
    )
    tplan = al.allocate_target_efficiency(tproblem)
    assert abs(tplan.efficiency - target) / target < 0.005

    uproblem = al.AllocationProblem(
        curves=[al.ChannelCurve(name="u", coef=10.0, alpha=1.0, inflection=50.0,
                                carryover_ratio=1.0, mean_spend=100.0)],
        scenario=al.TARGET_EFFICIENCY,
        target_value=100.0,
        constr_low=np.array([0.5]),
        constr_up=np.array([2.0]),
    )
    uplan = al.allocate_target_efficiency(uproblem)
    assert not uplan.converged
    assert any("unattainable" in n for n in uplan.notes)

    elapsed = time.monotonic() - t0
    assert elapsed < 10.0
    print(f"criterion 7 (allocator KKT, oracle, target sizing, {elapsed:.2f}s): PASS")


def test_criterion_8_round_trips(tmp_path, sims, base_searches):
    ds, _, decomp, space, _ = sims[0]
    data_path = tmp_path / "data.csv"
    ds.save(data_path)
    reloaded = load_dataset(
        data_path, ds.roles,
        (ds.window_start.isoformat(), ds.window_end.isoformat()),
    )
    assert reloaded.fingerprint() == ds.fingerprint()

    base, _ = base_searches
    selected = base[0].selected()
    cfg = SearchConfig(iterations=2000, trials=5, seed=0, weights=(1.0, 0.0, 0.0))
    fc = evaluate_candidate(ds, decomp, space.decode(selected.vector), cfg.split)
    fc.id = selected.id
    doc = export_model(fc, ds, space, cfg, RECOVERY_CFG)
    model_path = tmp_path / model_filename(fc.id)
    write_model(doc, model_path)
    _, fc2 = import_model(model_path, ds)  # re-score check at 1e-9 inside
    assert abs(fc2.metrics.nrmse_train - fc.metrics.nrmse_train) <= 1e-9

    ds1, t1 = simulator.simulate(n_periods=208, seed=11)
    ds2, t2 = simulator.simulate(n_periods=208, seed=11)
    for c in ds1.columns:
        np.testing.assert_allclose(ds1.columns[c], ds2.columns[c], rtol=1e-12)
    assert t1.to_dict() == t2.to_dict()
    print("criterion 8 (dataset, model, and simulator round trips): PASS")


@pytest.fixture(scope="module")
def cli_workflow(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance_cli")
    sim = root / "sim"
    assert cli.main(
        ["simulate", "--out", str(sim), "--periods", "208",
         "--channels", "3", "--seed", "0"]
    ) == cli.EXIT_OK

    cfg = json.loads((sim / "config.json").read_text(encoding="utf-8"))
    end = dt.date.fromisoformat(cfg["window_end"]) - dt.timedelta(weeks=13)
    cfg["window_end"] = end.isoformat()
    cfg["decomposition"] = {"yearly_fourier_order": 1, "n_changepoints": 1}
    cfg_path = sim / "config_run.json"
    cfg_path.write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")

    out = root / "runs"
    assert cli.main(
        ["run", "--config", str(cfg_path), "--out", str(out),
         "--run-id", "acceptance", "--iterations", "2000", "--trials", "5",
         "--quiet", "--onepagers", "1"]
    ) == cli.EXIT_OK
    return {"sim": sim, "run_dir": out / "acceptance", "root": root}


def test_criterion_9_cli_workflow(cli_workflow, capsys):
    run_dir = cli_workflow["run_dir"]
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    rows = cli.read_archive_csv(run_dir / "pareto.csv")
    assert len(rows) >= 100, f"only {len(rows)} Pareto candidates"

    pages = run_dir / "onepagers" / manifest["selected"]
    for name in PANEL_FILES.values():
        assert (pages / name).exists(), name

    assert cli.main(["select", "--run", str(run_dir)]) == cli.EXIT_OK
    capsys.readouterr()
    model_path = run_dir / "models" / f"RobynModel-{manifest['selected']}.json"
    assert model_path.exists()

    alloc_dir = cli_workflow["root"] / "alloc"
    assert cli.main(
        ["allocate", "--model", str(model_path), "--out", str(alloc_dir),
         "--low", "0.7", "--up", "1.2,1.5,1.5"]
    ) == cli.EXIT_OK
    capsys.readouterr()
    plan = json.loads((alloc_dir / "allocation.json").read_text(encoding="utf-8"))
    ups = [1.2, 1.5, 1.5]
    for m, p, up in zip(
        plan["spend_per_period"], plan["previous_spend_per_period"], ups
    ):
        assert 0.7 * p - 1e-9 <= m <= up * p + 1e-9

    refresh_out = cli_workflow["root"] / "refresh"
    assert cli.main(
        ["refresh", "--model", str(model_path),
         "--data", str(cli_workflow["sim"] / "data.csv"),
         "--steps", "13", "--iterations", "200", "--trials", "1",
         "--out", str(refresh_out), "--quiet"]
    ) == cli.EXIT_OK
    text = capsys.readouterr().out
    new_model = text.strip().splitlines()[-1]
    old = json.loads(model_path.read_text(encoding="utf-8"))
    new = json.loads(open(new_model, encoding="utf-8").read())
    assert dt.date.fromisoformat(new["window"][1]) == (
        dt.date.fromisoformat(old["window"][1]) + dt.timedelta(weeks=13)
    )
    print("criterion 9 (CLI simulate/run/select/allocate/refresh workflow): PASS")
