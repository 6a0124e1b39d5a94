"""Budget allocation from a selected model: response/marginal-return
queries, max-response allocation under budget and box constraints, and
target-efficiency budget sizing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MAX_RESPONSE = "max_response"
TARGET_EFFICIENCY = "target_efficiency"

N_RESTARTS = 10
PENALTY_GROWTH = 10.0
CONSTRAINT_TOL = 1e-10
PGRAD_TOL = 1e-8
EFFICIENCY_REL_TOL = 0.005


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelCurve:
    """Mean-spend response curve parameters for one channel.

    response(m) = coef * Hill(carryover_ratio * m; alpha, inflection) where
    m is mean per-period spend and carryover_ratio converts it to the mean
    adstocked level implied by the historical spend pattern.
    """

    name: str
    coef: float
    alpha: float
    inflection: float
    carryover_ratio: float
    mean_spend: float

    def response(self, m: float) -> float:
        if m < 0:
            raise AllocationError("spend must be nonnegative")
        v = self.carryover_ratio * m
        if v == 0.0:
            return 0.0
        va = v**self.alpha
        return self.coef * va / (va + self.inflection**self.alpha)

    def marginal(self, m: float) -> float:
        if m < 0:
            raise AllocationError("spend must be nonnegative")
        a = self.alpha
        c = self.inflection
        k = self.carryover_ratio
        v = k * m
        if v == 0.0:
            if a > 1.0:
                return 0.0
            if a == 1.0:
                return self.coef * k / c
            return math.inf
        va = v**a
        ca = c**a
        return self.coef * k * a * (v ** (a - 1.0)) * ca / (va + ca) ** 2


def curves_from_doc(doc: dict) -> dict[str, ChannelCurve]:
    """Build channel response curves from an exported model document."""
    curves = {}
    coefs = doc["coefficients"]["data_units"]
    for name, tr in doc["transforms"].items():
        if name not in doc["roles"]["paid_media_spends"]:
            continue
        curves[name] = ChannelCurve(
            name=name,
            coef=float(coefs.get(name, 0.0)),
            alpha=float(tr["alpha"]),
            inflection=float(tr["inflection"]),
            carryover_ratio=float(tr["carryover_ratio"]),
            mean_spend=float(tr["mean_spend"]),
        )
    return curves


def channel_response(doc: dict, channel: str, spend: float) -> float:
    curves = curves_from_doc(doc)
    if channel not in curves:
        raise AllocationError(f"unknown channel {channel!r}")
    return curves[channel].response(spend)


def marginal_response(doc: dict, channel: str, spend: float) -> float:
    curves = curves_from_doc(doc)
    if channel not in curves:
        raise AllocationError(f"unknown channel {channel!r}")
    return curves[channel].marginal(spend)


@dataclass
class AllocationProblem:
    curves: list[ChannelCurve]
    scenario: str = MAX_RESPONSE
    total_budget: float | None = None  # mean per-period budget
    target_value: float | None = None
    dep_var_type: str = "revenue"
    constr_low: np.ndarray | None = None  # multipliers of mean historical spend
    constr_up: np.ndarray | None = None
    n_periods: int = 1
    seed: int = 0

    def __post_init__(self):
        k = len(self.curves)
        if self.constr_low is None:
            self.constr_low = np.full(k, 0.7)
        if self.constr_up is None:
            self.constr_up = np.full(k, 1.5)
        self.constr_low = np.broadcast_to(
            np.asarray(self.constr_low, dtype=float), (k,)
        ).copy()
        self.constr_up = np.broadcast_to(
            np.asarray(self.constr_up, dtype=float), (k,)
        ).copy()
        if ((self.constr_low <= 0) | (self.constr_up < self.constr_low)).any():
            raise AllocationError("need 0 < constr_low <= constr_up per channel")

    @property
    def hist(self) -> np.ndarray:
        return np.array([c.mean_spend for c in self.curves])

    @property
    def lower(self) -> np.ndarray:
        return self.constr_low * self.hist

    @property
    def upper(self) -> np.ndarray:
        return self.constr_up * self.hist

    def budget(self) -> float:
        b = self.total_budget if self.total_budget is not None else float(self.hist.sum())
        if not self.lower.sum() <= b <= self.upper.sum():
            raise AllocationError(
                f"infeasible: budget {b} outside [{self.lower.sum()}, {self.upper.sum()}]"
            )
        return b


@dataclass
class AllocationPlan:
    channels: list[str]
    spend: np.ndarray  # mean per-period
    previous_spend: np.ndarray
    response: np.ndarray  # per-period by channel
    total_spend: float
    total_response: float
    efficiency: float  # achieved ROAS (revenue) or CPA (conversion)
    dep_var_type: str
    scenario: str
    n_periods: int
    bound_lower: np.ndarray = None
    bound_upper: np.ndarray = None
    binding_lower: list[bool] = field(default_factory=list)
    binding_upper: list[bool] = field(default_factory=list)
    kkt_residual: float = math.nan
    restarts_used: int = 0
    converged: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "dep_var_type": self.dep_var_type,
            "n_periods": self.n_periods,
            "channels": self.channels,
            "spend_per_period": [float(v) for v in self.spend],
            "previous_spend_per_period": [float(v) for v in self.previous_spend],
            "response_per_period": [float(v) for v in self.response],
            "total_spend": self.total_spend,
            "total_response": self.total_response,
            "efficiency": self.efficiency,
            "bound_lower": [float(v) for v in self.bound_lower],
            "bound_upper": [float(v) for v in self.bound_upper],
            "binding_lower": self.binding_lower,
            "binding_upper": self.binding_upper,
            "kkt_residual": self.kkt_residual,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "notes": self.notes,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _project_budget(m: np.ndarray, lower: np.ndarray, upper: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {sum m = budget, lower <= m <= upper} by
    bisection on the shift multiplier."""

    def total(shift):
        return np.clip(m - shift, lower, upper).sum()

    lo = float((m - upper).min()) - 1.0
    hi = float((m - lower).max()) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) > budget:
            lo = mid
        else:
            hi = mid
    return np.clip(m - 0.5 * (lo + hi), lower, upper)


def _grad(curves, m: np.ndarray) -> np.ndarray:
    return np.array([c.marginal(v) for c, v in zip(curves, m)])


def _objective(curves, m: np.ndarray) -> float:
    return float(sum(c.response(v) for c, v in zip(curves, m)))


def _auglag_solve(curves, lower, upper, budget, start, max_outer=25, max_inner=500):
    """Augmented Lagrangian on the budget equality with projected-gradient
    (box) inner ascent."""
    m = np.clip(start, lower, upper)
    mu = 0.0
    rho = 1.0
    scale = max(budget, 1.0)
    for _ in range(max_outer):
        for _ in range(max_inner):
            g = float(m.sum() - budget)
            grad = _grad(curves, m) - mu - rho * g
            step = 1.0 / max(rho, 1e-12)
            improved = False
            while step > 1e-16 * scale:
                trial = np.clip(m + step * grad, lower, upper)
                g_t = float(trial.sum() - budget)
                merit_t = _objective(curves, trial) - mu * g_t - 0.5 * rho * g_t * g_t
                merit = _objective(curves, m) - mu * g - 0.5 * rho * g * g
                if merit_t > merit + 1e-18:
                    m = trial
                    improved = True
                    break
                step *= 0.5
            pgrad = m - np.clip(m + grad, lower, upper)
            if np.linalg.norm(pgrad) < PGRAD_TOL * scale or not improved:
                break
        g = float(m.sum() - budget)
        mu += rho * g
        if abs(g) < CONSTRAINT_TOL * scale:
            break
        rho *= PENALTY_GROWTH
    m = _project_budget(m, lower, upper, budget)
    return m


def _pairwise_polish(curves, m, lower, upper, rounds=50):
    """Budget-preserving pairwise transfers to equalize interior marginals.

    Each transfer maximizes the two-channel response along the feasible
    segment, so the total objective never decreases and the budget equality
    is preserved exactly."""
    from scipy.optimize import minimize_scalar

    m = m.copy()
    n = len(m)
    if n < 2:
        return m
    scale = max(float(m.sum()), 1.0)
    for _ in range(rounds):
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                lo = max(lower[i] - m[i], m[j] - upper[j])
                hi = min(upper[i] - m[i], m[j] - lower[j])
                if hi - lo <= 1e-15 * scale:
                    continue

                def neg(d, i=i, j=j):
                    return -(
                        curves[i].response(m[i] + d) + curves[j].response(m[j] - d)
                    )

                res = minimize_scalar(
                    neg,
                    bounds=(lo, hi),
                    method="bounded",
                    options={"xatol": 1e-12 * scale},
                )
                d = float(np.clip(res.x, lo, hi))
                if -res.fun > -neg(0.0) + 1e-15 and abs(d) > 1e-15 * scale:
                    m[i] += d
                    m[j] -= d
                    improved = True
        if not improved:
            break
    return m


def _kkt_residual(curves, m, lower, upper, budget) -> float:
    """Max spread of marginal responses over interior coordinates plus the
    (post-projection, ~0) budget violation."""
    grad = _grad(curves, m)
    span = max(budget, 1.0)
    tol = 1e-7 * np.maximum(upper - lower, 1e-12)
    interior = (m > lower + tol) & (m < upper - tol)
    residual = abs(float(m.sum() - budget)) / span
    if interior.sum() >= 2:
        gi = grad[interior]
        residual = max(residual, float(gi.max() - gi.min()))
    return residual


def allocate_max_response(problem: AllocationProblem) -> AllocationPlan:
    """Maximize total response subject to the budget equality and per-channel
    box bounds; best of 10 deterministic multi-starts."""
    curves = problem.curves
    lower, upper = problem.lower, problem.upper
    budget = problem.budget()
    hist = problem.hist

    rng = np.random.default_rng(problem.seed)
    starts = [
        _project_budget(lower.copy(), lower, upper, budget),
        _project_budget(upper.copy(), lower, upper, budget),
        _project_budget(hist.copy(), lower, upper, budget),
        _project_budget(0.5 * (lower + upper), lower, upper, budget),
    ]
    while len(starts) < N_RESTARTS:
        u = rng.random(len(curves))
        starts.append(_project_budget(lower + u * (upper - lower), lower, upper, budget))

    best_m, best_val, best_idx = None, -math.inf, 0
    for idx, start in enumerate(starts):
        m = _auglag_solve(curves, lower, upper, budget, start)
        val = _objective(curves, m)
        if val > best_val + 1e-12:
            best_m, best_val, best_idx = m, val, idx

    m = _pairwise_polish(curves, best_m, lower, upper)
    response = np.array([c.response(v) for c, v in zip(curves, m)])
    total_resp = float(response.sum())
    total_spend = budget * problem.n_periods
    if problem.dep_var_type == "revenue":
        efficiency = total_resp * problem.n_periods / total_spend if total_spend else 0.0
    else:
        efficiency = (
            total_spend / (total_resp * problem.n_periods) if total_resp > 0 else math.inf
        )
    span = np.maximum(upper - lower, 1e-12)
    kkt = _kkt_residual(curves, m, lower, upper, budget)
    return AllocationPlan(
        channels=[c.name for c in curves],
        spend=m,
        previous_spend=hist,
        response=response,
        total_spend=total_spend,
        total_response=total_resp * problem.n_periods,
        efficiency=efficiency,
        dep_var_type=problem.dep_var_type,
        scenario=MAX_RESPONSE,
        n_periods=problem.n_periods,
        bound_lower=lower,
        bound_upper=upper,
        binding_lower=[bool(v <= lo + 1e-9 * s) for v, lo, s in zip(m, lower, span)],
        binding_upper=[bool(v >= up - 1e-9 * s) for v, up, s in zip(m, upper, span)],
        kkt_residual=kkt,
        restarts_used=best_idx + 1,
        converged=kkt < 1e-4,
    )


def allocate_target_efficiency(problem: AllocationProblem) -> AllocationPlan:
    """Bisection over total budget for the largest budget whose achieved
    ROAS stays at or above (CPA at or below) the target."""
    if problem.target_value is None or problem.target_value <= 0:
        raise AllocationError("target_value must be positive")
    curves = problem.curves
    lower = problem.lower
    hist = problem.hist
    target = problem.target_value
    revenue = problem.dep_var_type == "revenue"

    lo_b = float(lower.sum())
    hi_b = 10.0 * float(hist.sum())
    hi_b = min(hi_b, float(problem.upper.sum()))
    notes: list[str] = []

    def solve(budget: float) -> AllocationPlan:
        sub = AllocationProblem(
            curves=curves,
            scenario=MAX_RESPONSE,
            total_budget=budget,
            dep_var_type=problem.dep_var_type,
            constr_low=problem.constr_low,
            constr_up=problem.constr_up,
            n_periods=problem.n_periods,
            seed=problem.seed,
        )
        return allocate_max_response(sub)

    def meets(plan: AllocationPlan) -> bool:
        if revenue:
            return plan.efficiency >= target
        return plan.efficiency <= target

    plan_lo = solve(lo_b)
    if not meets(plan_lo):
        notes.append(
            "target unattainable even at the lower budget bracket; "
            f"best achievable efficiency {plan_lo.efficiency:.6g}"
        )
        plan = plan_lo
        plan.converged = False
    else:
        plan_hi = solve(hi_b)
        if meets(plan_hi):
            notes.append("target exceeded everywhere: returning the bracket top")
            plan = plan_hi
        else:
            width_tol = 1e-6 * float(hist.sum())
            lo, hi = lo_b, hi_b
            plan = plan_lo
            while hi - lo > width_tol:
                mid = 0.5 * (lo + hi)
                plan_mid = solve(mid)
                if meets(plan_mid):
                    lo, plan = mid, plan_mid
                    if abs(plan_mid.efficiency - target) <= EFFICIENCY_REL_TOL * target:
                        break
                else:
                    hi = mid
    plan.scenario = TARGET_EFFICIENCY
    plan.notes.extend(notes)
    return plan
