"""Ridge regression with sign constraints and chronological 3-way split."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

MEDIA = "media"
ORGANIC = "organic"
CONTEXT = "context"
DECOMP = "decomp"

# Groups whose coefficients are clamped at zero from below.
NONNEGATIVE_GROUPS = (MEDIA, ORGANIC)

LAMBDA_MIN_RATIO = 0.0001


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    train_fraction: float = 0.7
    ts_validation: bool = True

    def __post_init__(self):
        if not 0.5 <= self.train_fraction <= 0.9:
            raise RegressionError(
                f"train_fraction must be in [0.5, 0.9], got {self.train_fraction}"
            )

    def split_indices(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Chronological train/val/test row indices; val and test each take
        half the remainder."""
        if not self.ts_validation:
            return np.arange(n), np.arange(0), np.arange(0)
        n_train = int(round(self.train_fraction * n))
        n_val = (n - n_train + 1) // 2
        train = np.arange(n_train)
        val = np.arange(n_train, n_train + n_val)
        test = np.arange(n_train + n_val, n)
        if len(train) == 0 or len(val) == 0 or len(test) == 0:
            raise RegressionError(f"split leaves an empty part for n={n}")
        return train, val, test


@dataclass
class DesignMatrix:
    """Standardized design over the modeling window.

    ``raw`` holds the unstandardized columns; standardization constants are
    computed on the training split.
    """

    names: list[str]
    groups: list[str]
    raw: np.ndarray
    y: np.ndarray
    split: SplitPlan
    means: np.ndarray = field(init=False)
    sds: np.ndarray = field(init=False)
    Z: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.raw.ndim != 2 or self.raw.shape[1] != len(self.names):
            raise RegressionError("design shape does not match column names")
        train, _, _ = self.split.split_indices(len(self.y))
        tr = self.raw[train]
        self.means = tr.mean(axis=0)
        self.sds = tr.std(axis=0)
        if (self.sds == 0).any():
            bad = [n for n, s in zip(self.names, self.sds) if s == 0]
            raise RegressionError(f"constant design column(s) on training split: {bad}")
        self.Z = (self.raw - self.means) / self.sds

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return len(self.names)

    def nonneg_mask(self) -> np.ndarray:
        return np.array([g in NONNEGATIVE_GROUPS for g in self.groups], dtype=np.uint8)


def lambda_bounds(design: DesignMatrix) -> tuple[float, float]:
    """Penalty range: lambda_max = max_j |z_j . y| / (n * 0.001) on the
    training split, lambda_min = lambda_max * 1e-4.

    The response enters standardized by its training sd so the penalty scale
    is invariant to the dependent variable's units; a unit-variance response
    reproduces the formula verbatim.
    """
    train, _, _ = design.split.split_indices(design.n)
    if design.p == 0:
        raise RegressionError("empty design")
    Z = design.Z[train]
    y = design.y[train]
    y_sd = float(y.std())
    ys = (y - y.mean()) / y_sd if y_sd > 0 else y
    lambda_max = float(np.abs(Z.T @ ys).max()) / (len(train) * 0.001)
    return LAMBDA_MIN_RATIO * lambda_max, lambda_max


def lambda_from_fraction(design: DesignMatrix, h: float) -> float:
    """Linear map of the unit-interval lambda hyperparameter into bounds."""
    lo, hi = lambda_bounds(design)
    return lo + h * (hi - lo)


@dataclass
class RidgeFit:
    coef_std: np.ndarray
    intercept_std: float
    coef_data: np.ndarray
    intercept_data: float
    lam: float
    converged: bool
    sweeps: int
    degenerate: bool = False

    def predict(self, design: DesignMatrix) -> np.ndarray:
        return self.intercept_std + design.Z @ self.coef_std

    def predict_raw(self, raw: np.ndarray) -> np.ndarray:
        return self.intercept_data + raw @ self.coef_data


@dataclass
class FitMetrics:
    nrmse_train: float
    nrmse_val: float | None
    nrmse_test: float | None
    adj_r2_train: float
    adj_r2_val: float | None
    adj_r2_test: float | None

    @property
    def nrmse_selection(self) -> float:
        """Validation NRMSE when the 3-way split is active, else train."""
        return self.nrmse_train if self.nrmse_val is None else self.nrmse_val


def fit_ridge(design: DesignMatrix, lam: float, max_sweeps: int = 1000,
              tol: float = 1e-7) -> RidgeFit:
    """Cyclic coordinate descent on the training split.

    Paid-media and organic coefficients are clamped at zero from below;
    context/decomposition columns and the intercept are unconstrained, and
    the intercept is unpenalized.
    """
    if lam < 0:
        raise RegressionError(f"lambda must be nonnegative, got {lam}")
    train, _, _ = design.split.split_indices(design.n)
    Z = design.Z[train]
    y = design.y[train]
    ybar = float(y.mean())
    degenerate = np.abs(Z.T @ y).max() == 0.0
    if degenerate:
        beta = np.zeros(design.p)
        converged, sweeps = True, 0
    else:
        beta, sweeps, converged = kernels.ridge_cd(
            Z, y - ybar, lam, design.nonneg_mask(), max_sweeps, tol
        )
        beta = np.asarray(beta)
    coef_data = beta / design.sds
    intercept_data = ybar - float(coef_data @ design.means)
    return RidgeFit(
        coef_std=beta,
        intercept_std=ybar,
        coef_data=coef_data,
        intercept_data=intercept_data,
        lam=lam,
        converged=converged,
        sweeps=sweeps,
        degenerate=degenerate,
    )


def _nrmse(y: np.ndarray, yhat: np.ndarray) -> float:
    span = float(y.max() - y.min())
    if span == 0:
        raise RegressionError("constant response in split: NRMSE undefined")
    return float(np.sqrt(np.mean((y - yhat) ** 2))) / span


def _adj_r2(y: np.ndarray, yhat: np.ndarray, p: int) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    n = len(y)
    if n - p - 1 <= 0:
        return r2
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def score_fit(fit: RidgeFit, design: DesignMatrix) -> FitMetrics:
    """NRMSE (RMSE over response range) and adjusted R^2 per split, with
    predictions from train-fitted coefficients."""
    train, val, test = design.split.split_indices(design.n)
    yhat = fit.predict(design)
    out = {}
    for label, idx in (("train", train), ("val", val), ("test", test)):
        if len(idx) == 0:
            out[f"nrmse_{label}"] = None
            out[f"adj_r2_{label}"] = None
            continue
        out[f"nrmse_{label}"] = _nrmse(design.y[idx], yhat[idx])
        out[f"adj_r2_{label}"] = _adj_r2(design.y[idx], yhat[idx], design.p)
    return FitMetrics(**out)
