"""Gradient-free hyperparameter search with a candidate archive,
Pareto-front extraction, candidate clustering, and model refresh."""

from __future__ import annotations

import datetime as dt
import math
import multiprocessing
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import pipeline
from .dataset import MmmDataset, load_dataset
from .decomposition import DecompositionConfig, DecompositionResult, decompose
from .evaluation import LiftStudy, ObjectiveRanges, ObjectiveScores, scalarize
from .pipeline import HyperparameterVector
from .regression import SplitPlan
from .transforms import GEOMETRIC, WEIBULL_CDF, WEIBULL_PDF, default_max_lag

DEFAULT_ADSTOCK_BOUNDS = {
    GEOMETRIC: {"theta": (0.0, 0.8)},
    WEIBULL_CDF: {"shape": (0.0, 2.0), "scale": (0.0, 0.1)},
    WEIBULL_PDF: {"shape": (0.0001, 10.0), "scale": (0.0, 0.1)},
}
DEFAULT_SATURATION_BOUNDS = {"alpha": (0.5, 3.0), "gamma": (0.3, 1.0)}
LAMBDA_HP_BOUNDS = (0.0, 1.0)

# Weibull shape/scale must stay strictly positive after decoding.
_POSITIVE_FLOOR = 1e-6

REFRESH_NARROW_FRACTION = 0.1

# Default log target resolves to stderr at call time; pass None for silence.
_LOG_DEFAULT = object()


class SearchError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 2000
    trials: int = 5
    seed: int = 0
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ts_validation: bool = True
    train_fraction: float = 0.7
    calibration_constraint: float = 0.1
    min_candidates: int = 100
    clusters: bool = True
    population: int = 32
    mutation: float = 0.8
    crossover: float = 0.9
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.iterations < self.population:
            raise SearchError(
                f"iterations ({self.iterations}) must be >= population "
                f"({self.population})"
            )
        if self.trials < 1:
            raise SearchError("trials must be >= 1")
        if not 0.01 <= self.calibration_constraint <= 0.1:
            raise SearchError("calibration_constraint must be in [0.01, 0.1]")

    @property
    def split(self) -> SplitPlan:
        return SplitPlan(
            train_fraction=self.train_fraction, ts_validation=self.ts_validation
        )

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "trials": self.trials,
            "seed": self.seed,
            "weights": list(self.weights),
            "ts_validation": self.ts_validation,
            "train_fraction": self.train_fraction,
            "calibration_constraint": self.calibration_constraint,
            "min_candidates": self.min_candidates,
            "clusters": self.clusters,
            "population": self.population,
            "mutation": self.mutation,
            "crossover": self.crossover,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        d = dict(d)
        if "weights" in d:
            d["weights"] = tuple(d["weights"])
        return cls(**d)


@dataclass
class HyperparameterSpace:
    """Box bounds per channel transform parameter plus the global lambda
    position; points decode from the unit hypercube by affine map."""

    family: str
    channels: list[str]
    bounds: dict[str, dict[str, tuple[float, float]]]
    max_lag: int
    lambda_bounds: tuple[float, float] = LAMBDA_HP_BOUNDS

    def __post_init__(self):
        for channel, params in self.bounds.items():
            for pname, (lo, hi) in params.items():
                if not lo < hi:
                    raise SearchError(
                        f"bound for {channel}.{pname} must have lower < upper"
                    )
        if not self.lambda_bounds[0] < self.lambda_bounds[1]:
            raise SearchError("lambda bound must have lower < upper")

    @classmethod
    def from_dataset(
        cls,
        ds: MmmDataset,
        family: str = GEOMETRIC,
        overrides: dict | None = None,
        max_lag: int | None = None,
    ) -> "HyperparameterSpace":
        if family not in DEFAULT_ADSTOCK_BOUNDS:
            raise SearchError(f"unknown adstock family {family!r}")
        channels = pipeline.transform_channel_names(ds)
        bounds = {}
        for c in channels:
            per = dict(DEFAULT_ADSTOCK_BOUNDS[family])
            per.update(DEFAULT_SATURATION_BOUNDS)
            if overrides and c in overrides:
                per.update({k: tuple(v) for k, v in overrides[c].items()})
            bounds[c] = per
        if max_lag is None:
            max_lag = default_max_lag(ds.frequency, ds.n_in_window)
        return cls(family=family, channels=list(channels), bounds=bounds, max_lag=max_lag)

    def param_names(self) -> list[tuple[str, str]]:
        order = (
            ["theta"] if self.family == GEOMETRIC else ["shape", "scale"]
        ) + ["alpha", "gamma"]
        names = [(c, p) for c in self.channels for p in order]
        names.append(("", "lambda_hp"))
        return names

    @property
    def dim(self) -> int:
        return len(self.param_names())

    def _bound(self, channel: str, pname: str) -> tuple[float, float]:
        if pname == "lambda_hp":
            return self.lambda_bounds
        return self.bounds[channel][pname]

    def decode(self, u: np.ndarray) -> HyperparameterVector:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise SearchError(f"expected unit vector of length {self.dim}")
        channels: dict[str, dict[str, float]] = {c: {} for c in self.channels}
        lambda_hp = 0.0
        for value, (channel, pname) in zip(u, self.param_names()):
            lo, hi = self._bound(channel, pname)
            decoded = lo + float(value) * (hi - lo)
            if pname in ("shape", "scale"):
                decoded = max(decoded, _POSITIVE_FLOOR)
            if pname == "theta":
                decoded = min(decoded, 1.0 - 1e-12)
            if pname == "lambda_hp":
                lambda_hp = decoded
            else:
                channels[channel][pname] = decoded
        return HyperparameterVector(
            family=self.family,
            channels=channels,
            lambda_hp=lambda_hp,
            max_lag=self.max_lag,
        )

    def narrowed(self, hv: HyperparameterVector, fraction: float = REFRESH_NARROW_FRACTION) -> "HyperparameterSpace":
        """Bounds re-centered on a selected point: value +- fraction of each
        original bound width, clipped to the original bounds."""
        new_bounds: dict[str, dict[str, tuple[float, float]]] = {}
        for c in self.channels:
            new_bounds[c] = {}
            for pname, (lo, hi) in self.bounds[c].items():
                v = hv.channels[c][pname]
                half = fraction * (hi - lo)
                new_bounds[c][pname] = (max(lo, v - half), min(hi, v + half))
        lo, hi = self.lambda_bounds
        half = fraction * (hi - lo)
        v = hv.lambda_hp
        return HyperparameterSpace(
            family=self.family,
            channels=list(self.channels),
            bounds=new_bounds,
            max_lag=self.max_lag,
            lambda_bounds=(max(lo, v - half), min(hi, v + half)),
        )

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "channels": list(self.channels),
            "bounds": {c: {p: list(b) for p, b in per.items()} for c, per in self.bounds.items()},
            "max_lag": self.max_lag,
            "lambda_bounds": list(self.lambda_bounds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperparameterSpace":
        return cls(
            family=d["family"],
            channels=list(d["channels"]),
            bounds={
                c: {p: tuple(b) for p, b in per.items()}
                for c, per in d["bounds"].items()
            },
            max_lag=int(d["max_lag"]),
            lambda_bounds=tuple(d["lambda_bounds"]),
        )


@dataclass
class CandidateModel:
    """Compact archive record for one evaluated point; the full fit is
    reproducible from the stored vector (determinism contract)."""

    id: str
    trial: int
    generation: int
    index: int
    vector: np.ndarray
    failed: bool = False
    error: str = ""
    nrmse: float = math.inf
    nrmse_train: float = math.inf
    nrmse_val: float | None = None
    nrmse_test: float | None = None
    adj_r2_train: float = math.nan
    adj_r2_val: float | None = None
    adj_r2_test: float | None = None
    decomp_rssd: float = math.inf
    mape_lift: float | None = None
    lam: float = math.nan
    converged: bool = False
    effect_shares: dict[str, float] = field(default_factory=dict)
    spend_shares: dict[str, float] = field(default_factory=dict)
    roi: dict[str, float] = field(default_factory=dict)
    efficiency: dict[str, float] = field(default_factory=dict)
    pareto_front: int | None = None
    cluster: int | None = None

    @property
    def scores(self) -> ObjectiveScores:
        return ObjectiveScores(
            nrmse=self.nrmse, decomp_rssd=self.decomp_rssd, mape_lift=self.mape_lift
        )


@dataclass
class SearchResult:
    archive: list[CandidateModel]
    space: HyperparameterSpace
    config: SearchConfig
    ranges: ObjectiveRanges
    calibrated: bool
    dataset_fingerprint: str
    rssd_reference: dict[str, float] | None = None

    def by_id(self, candidate_id: str) -> CandidateModel:
        for c in self.archive:
            if c.id == candidate_id:
                return c
        raise SearchError(f"unknown candidate id {candidate_id!r}")

    def scalar(self, candidate: CandidateModel) -> float:
        if candidate.failed:
            return math.inf
        return scalarize(candidate.scores, self.config.weights, self.ranges)

    def best_by_nrmse(self) -> CandidateModel:
        ok = [c for c in self.archive if not c.failed]
        return min(ok, key=lambda c: c.nrmse)

    def selected(self) -> CandidateModel:
        """Front-1 candidate with the best scalarized score."""
        front1 = [c for c in self.archive if c.pareto_front == 1]
        if not front1:
            raise SearchError("pareto_fronts has not been run")
        return min(front1, key=self.scalar)


# Worker-side evaluation context (set by fork inheritance or initializer).
_EVAL_CTX: dict = {}


def _init_worker(ctx):
    global _EVAL_CTX
    _EVAL_CTX = ctx


def _eval_point(args):
    idx, vector = args
    ctx = _EVAL_CTX
    return idx, _evaluate(ctx, vector)


def _evaluate(ctx, vector: np.ndarray) -> dict:
    space: HyperparameterSpace = ctx["space"]
    try:
        hv = space.decode(vector)
        fc = pipeline.evaluate_candidate(
            ctx["ds"],
            ctx["decomp"],
            hv,
            ctx["split"],
            studies=ctx["studies"],
            rssd_reference=ctx["rssd_reference"],
        )
    except Exception as exc:  # scored worst, search continues
        return {"failed": True, "error": f"{type(exc).__name__}: {exc}"}
    m = fc.metrics
    return {
        "failed": False,
        "nrmse": m.nrmse_selection,
        "nrmse_train": m.nrmse_train,
        "nrmse_val": m.nrmse_val,
        "nrmse_test": m.nrmse_test,
        "adj_r2_train": m.adj_r2_train,
        "adj_r2_val": m.adj_r2_val,
        "adj_r2_test": m.adj_r2_test,
        "decomp_rssd": fc.scores.decomp_rssd,
        "mape_lift": fc.scores.mape_lift,
        "lam": fc.lam,
        "converged": fc.fit.converged,
        "effect_shares": fc.effect_shares,
        "spend_shares": fc.spend_shares,
        "roi": fc.roi,
        "efficiency": fc.efficiency(),
    }


def _make_candidate(trial, generation, index, vector, payload) -> CandidateModel:
    cand = CandidateModel(
        id=f"{trial}_{generation}_{index}",
        trial=trial,
        generation=generation,
        index=index,
        vector=np.array(vector, dtype=float),
    )
    for key, value in payload.items():
        setattr(cand, key, value)
    return cand


def run_search(
    ds: MmmDataset,
    decomp: DecompositionResult | None,
    space: HyperparameterSpace,
    cfg: SearchConfig,
    studies: list[LiftStudy] | None = None,
    rssd_reference: dict[str, float] | None = None,
    log=_LOG_DEFAULT,
) -> SearchResult:
    """Differential evolution (rand/1/bin) per independent trial.

    Every evaluated point is archived; selection uses the weighted scalar
    with archive-range normalization refreshed each generation.  With
    ``workers > 1`` candidate evaluations run in a process pool; results are
    consumed in candidate-index order so the outcome does not depend on
    completion order.
    """
    if cfg.weights[2] > 0 and not studies:
        raise SearchError(
            "mape weight is positive but no calibration studies were given"
        )
    if log is _LOG_DEFAULT:
        log = sys.stderr
    ctx = {
        "ds": ds,
        "decomp": decomp,
        "space": space,
        "split": cfg.split,
        "studies": list(studies) if studies else None,
        "rssd_reference": rssd_reference,
    }
    pool = None
    if cfg.workers > 1:
        pool = multiprocessing.get_context("fork").Pool(
            cfg.workers, initializer=_init_worker, initargs=(ctx,)
        )

    def evaluate_batch(vectors):
        tasks = list(enumerate(vectors))
        if pool is None:
            _init_worker(ctx)
            results = [_eval_point(t) for t in tasks]
        else:
            results = pool.map(_eval_point, tasks)
        results.sort(key=lambda r: r[0])
        return [payload for _, payload in results]

    archive: list[CandidateModel] = []
    ranges = ObjectiveRanges.empty()
    dim = space.dim

    def scalar_of(cand: CandidateModel) -> float:
        if cand.failed:
            return math.inf
        return scalarize(cand.scores, cfg.weights, ranges)

    try:
        for trial in range(1, cfg.trials + 1):
            rng = np.random.default_rng((cfg.seed, trial))
            pop = rng.random((cfg.population, dim))
            payloads = evaluate_batch(pop)
            parents = []
            for i, payload in enumerate(payloads):
                cand = _make_candidate(trial, 1, i + 1, pop[i], payload)
                archive.append(cand)
                if not cand.failed:
                    ranges.update(cand.scores)
                parents.append(cand)
            evals = cfg.population
            generation = 1
            while evals < cfg.iterations:
                generation += 1
                n_children = min(cfg.population, cfg.iterations - evals)
                children = np.empty((n_children, dim))
                for i in range(n_children):
                    choices = [j for j in range(cfg.population) if j != i]
                    r1, r2, r3 = rng.choice(choices, size=3, replace=False)
                    mutant = pop[r1] + cfg.mutation * (pop[r2] - pop[r3])
                    np.clip(mutant, 0.0, 1.0, out=mutant)
                    cross = rng.random(dim) < cfg.crossover
                    cross[rng.integers(dim)] = True
                    children[i] = np.where(cross, mutant, pop[i])
                payloads = evaluate_batch(children)
                child_cands = []
                for i, payload in enumerate(payloads):
                    cand = _make_candidate(trial, generation, i + 1, children[i], payload)
                    archive.append(cand)
                    if not cand.failed:
                        ranges.update(cand.scores)
                    child_cands.append(cand)
                for i, cand in enumerate(child_cands):
                    if scalar_of(cand) <= scalar_of(parents[i]):
                        pop[i] = children[i]
                        parents[i] = cand
                evals += n_children
                if log is not None:
                    best = min((scalar_of(p) for p in parents), default=math.inf)
                    print(
                        f"trial {trial} generation {generation}: "
                        f"{evals}/{cfg.iterations} evaluations, best scalar {best:.6f}",
                        file=log,
                    )
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    return SearchResult(
        archive=archive,
        space=space,
        config=cfg,
        ranges=ranges,
        calibrated=bool(studies),
        dataset_fingerprint=ds.fingerprint(),
        rssd_reference=rssd_reference,
    )


def _active_objectives(result: SearchResult) -> list[int]:
    active = [k for k in (0, 1) if result.config.weights[k] > 0]
    if result.calibrated and result.config.weights[2] > 0:
        active.append(2)
    if not active:
        active = [0]
    return active


def _objective_matrix(cands, active) -> np.ndarray:
    rows = []
    for c in cands:
        vals = c.scores.as_tuple()
        rows.append([vals[k] for k in active])
    return np.array(rows, dtype=float)


def _nondominated_mask_2d(obj: np.ndarray) -> np.ndarray:
    """Sort-based sweep: a point survives iff its second objective is the
    minimum of its first-objective group and beats every smaller group."""
    order = np.lexsort((obj[:, 1], obj[:, 0]))
    o = obj[order]
    mask = np.zeros(len(obj), dtype=bool)
    best = np.inf
    i, n = 0, len(o)
    while i < n:
        j = i
        while j < n and o[j, 0] == o[i, 0]:
            j += 1
        gmin = o[i:j, 1].min()
        if gmin < best:
            for t in range(i, j):
                if o[t, 1] == gmin:
                    mask[order[t]] = True
        best = min(best, gmin)
        i = j
    return mask


def _nondominated_mask(obj: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other (<= all, < any)."""
    n, k = obj.shape
    if k == 1:
        return obj[:, 0] == obj[:, 0].min()
    if k == 2:
        return _nondominated_mask_2d(obj)
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        if not mask[i]:
            continue
        le = (obj <= obj[i]).all(axis=1)
        lt = (obj < obj[i]).any(axis=1)
        if (le & lt).any():
            mask[i] = False
    return mask


def pareto_fronts(result: SearchResult) -> list[CandidateModel]:
    """Rank candidates by repeated nondominated sorting over the active
    objectives, filling fronts until min_candidates is reached."""
    if not result.archive:
        raise SearchError("empty archive")
    pool = [c for c in result.archive if not c.failed]
    for c in result.archive:
        c.pareto_front = None
    if result.calibrated:
        mapes = np.array([c.mape_lift for c in pool], dtype=float)
        cutoff = np.quantile(mapes, result.config.calibration_constraint)
        pool = [c for c in pool if c.mape_lift <= cutoff]

    active = _active_objectives(result)
    selected: list[CandidateModel] = []
    front = 0
    remaining = list(pool)
    while remaining and len(selected) < result.config.min_candidates:
        front += 1
        obj = _objective_matrix(remaining, active)
        mask = _nondominated_mask(obj)
        this_front = [c for c, m in zip(remaining, mask) if m]
        for c in this_front:
            c.pareto_front = front
        selected.extend(this_front)
        remaining = [c for c, m in zip(remaining, mask) if not m]
    return selected


def cluster_candidates(candidates: list[CandidateModel], seed: int = 0) -> int:
    """K-means over per-channel ROI (or CPA) vectors, standardized per
    channel; k chosen by max mean silhouette.  Returns the number of
    clusters used."""
    from sklearn.cluster import KMeans
    from sklearn.metrics import silhouette_score

    if not candidates:
        raise SearchError("no candidates to cluster")
    channels = sorted(candidates[0].efficiency)
    X = np.array(
        [[c.efficiency[ch] for ch in channels] for c in candidates], dtype=float
    )
    X = np.nan_to_num(X, posinf=0.0, neginf=0.0)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    X = (X - mu) / sd
    n = len(candidates)
    if n < 4 or np.allclose(X, X[0]):
        for c in candidates:
            c.cluster = 1
        return 1
    best_k, best_score, best_labels = 1, -np.inf, None
    for k in range(2, min(10, n - 1) + 1):
        km = KMeans(n_clusters=k, n_init=20, random_state=seed)
        labels = km.fit_predict(X)
        if len(set(labels)) < 2:
            continue
        score = silhouette_score(X, labels)
        if score > best_score:
            best_k, best_score, best_labels = k, score, labels
    if best_labels is None:
        for c in candidates:
            c.cluster = 1
        return 1
    for c, lab in zip(candidates, best_labels):
        c.cluster = int(lab) + 1
    return best_k


def refresh_model(
    doc: dict,
    data_path,
    holidays,
    refresh_steps: int,
    refresh_iters: int = 1000,
    refresh_trials: int = 1,
    seed: int | None = None,
    workers: int = 1,
    log=_LOG_DEFAULT,
):
    """Re-estimate on a window advanced by ``refresh_steps`` periods with
    bounds narrowed around the previously selected model.

    Decomp.RSSD for refresh candidates is computed against the previous
    model's effect shares (stability objective).  Returns
    (SearchResult, MmmDataset, DecompositionResult).
    """
    from .reporting import roles_from_doc  # local import avoids a cycle

    if refresh_steps < 1:
        raise SearchError("refresh_steps must be >= 1")
    roles = roles_from_doc(doc)
    old_start = dt.date.fromisoformat(doc["window"][0])
    old_end = dt.date.fromisoformat(doc["window"][1])
    period = dt.timedelta(days=1 if doc["frequency"] == "daily" else 7)
    new_start = old_start + refresh_steps * period
    new_end = old_end + refresh_steps * period

    ds = load_dataset(data_path, roles, window=(new_start, new_end))
    if ds.dates[-1] < new_end:
        raise SearchError(
            f"new data must extend the window by at least {refresh_steps} periods"
        )

    old_space = HyperparameterSpace.from_dict(doc["space"])
    hv = HyperparameterVector.from_dict(doc["hyperparameters"])
    space = old_space.narrowed(hv)

    dcfg = DecompositionConfig.from_dict(doc["decomposition"])
    decomp = decompose(ds, holidays, dcfg) if dcfg.components else None

    old_cfg = SearchConfig.from_dict(doc["search"])
    weights = old_cfg.weights
    if weights[2] > 0:
        # Refresh has no calibration input; drop the mape weight.
        weights = (weights[0], weights[1], 0.0)
    cfg = replace(
        old_cfg,
        iterations=refresh_iters,
        trials=refresh_trials,
        seed=old_cfg.seed if seed is None else seed,
        weights=weights,
        workers=workers,
    )
    result = run_search(
        ds,
        decomp,
        space,
        cfg,
        rssd_reference=dict(doc["effect_shares"]),
        log=log,
    )
    return result, ds, decomp
