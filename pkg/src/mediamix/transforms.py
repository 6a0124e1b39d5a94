"""Media transforms: geometric/Weibull adstock and Hill saturation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

GEOMETRIC = "geometric"
WEIBULL_CDF = "weibull_cdf"
WEIBULL_PDF = "weibull_pdf"
ADSTOCK_FAMILIES = (GEOMETRIC, WEIBULL_CDF, WEIBULL_PDF)


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class AdstockParams:
    family: str
    theta: float | None = None
    shape: float | None = None
    scale: float | None = None
    max_lag: int | None = None

    def __post_init__(self):
        if self.family == GEOMETRIC:
            if self.theta is None or not 0.0 <= self.theta < 1.0:
                raise TransformError(f"theta must be in [0, 1), got {self.theta}")
        elif self.family in (WEIBULL_CDF, WEIBULL_PDF):
            if self.shape is None or self.shape <= 0:
                raise TransformError(f"shape must be positive, got {self.shape}")
            if self.scale is None or not 0.0 < self.scale < 1.0:
                raise TransformError(f"scale must be in (0, 1), got {self.scale}")
            if self.max_lag is None or self.max_lag < 1:
                raise TransformError(f"max_lag must be >= 1, got {self.max_lag}")
        else:
            raise TransformError(f"unknown adstock family {self.family!r}")


@dataclass(frozen=True)
class SaturationParams:
    alpha: float
    gamma: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise TransformError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.gamma <= 1.0:
            raise TransformError(f"gamma must be in (0, 1], got {self.gamma}")


def adstock_geometric(x, theta: float) -> np.ndarray:
    """x'_0 = x_0; x'_t = x_t + theta * x'_{t-1}."""
    if not 0.0 <= theta < 1.0:
        raise TransformError(f"theta must be in [0, 1), got {theta}")
    return kernels.geometric_adstock(np.asarray(x, dtype=float), theta)


def weibull_lag_weights(family: str, shape: float, scale: float, max_lag: int) -> np.ndarray:
    """Lag-weight vector for the Weibull adstock families.

    CDF family: survival weights w_l = exp(-(l/lam)^shape), so w_0 = 1.
    PDF family: Weibull density at lag midpoints l+0.5, normalized to peak 1,
    which allows a delayed peak for shape > 1.
    Effective scale lam = max(1, ceil(scale * max_lag)).
    """
    if shape <= 0:
        raise TransformError(f"shape must be positive, got {shape}")
    if not 0.0 < scale < 1.0:
        raise TransformError(f"scale must be in (0, 1), got {scale}")
    if max_lag < 1:
        raise TransformError(f"max_lag must be >= 1, got {max_lag}")
    lam = max(1.0, float(np.ceil(scale * max_lag)))
    lags = np.arange(max_lag, dtype=float)
    if family == WEIBULL_CDF:
        return np.exp(-((lags / lam) ** shape))
    if family == WEIBULL_PDF:
        mid = lags + 0.5
        dens = (shape / lam) * (mid / lam) ** (shape - 1.0) * np.exp(-((mid / lam) ** shape))
        return dens / dens.max()
    raise TransformError(f"unknown Weibull family {family!r}")


def adstock_weibull(x, family: str, shape: float, scale: float, max_lag: int) -> np.ndarray:
    weights = weibull_lag_weights(family, shape, scale, max_lag)
    return kernels.lagged_convolve(np.asarray(x, dtype=float), weights)


def adstock(x, params: AdstockParams) -> np.ndarray:
    if params.family == GEOMETRIC:
        return adstock_geometric(x, params.theta)
    return adstock_weibull(x, params.family, params.shape, params.scale, params.max_lag)


def lag_weights(params: AdstockParams, n: int) -> np.ndarray:
    """Explicit lag-weight curve, length n (geometric: theta^l)."""
    if params.family == GEOMETRIC:
        return params.theta ** np.arange(n, dtype=float)
    w = weibull_lag_weights(params.family, params.shape, params.scale, params.max_lag)
    if len(w) < n:
        w = np.concatenate([w, np.zeros(n - len(w))])
    return w[:n]


def hill(v, alpha: float, inflection: float) -> np.ndarray:
    """Hill curve s(v) = v^a / (v^a + c^a) with known inflection c."""
    v = np.asarray(v, dtype=float)
    va = np.power(v, alpha)
    return va / (va + inflection**alpha)


def saturate_hill(x_adstocked, alpha: float, gamma: float):
    """Hill saturation with inflection at min + gamma * (max - min).

    Returns (saturated series in [0, 1), inflection in data units).
    """
    SaturationParams(alpha=alpha, gamma=gamma)
    x = np.asarray(x_adstocked, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise TransformError("constant series: saturation inflection undefined")
    inflection = lo + gamma * (hi - lo)
    return hill(x, alpha, inflection), inflection


@dataclass
class TransformedChannel:
    """Adstock + saturation output with intermediates for diagnostics.

    Series are aligned to the full dataset; ``window`` marks the modeling
    rows that the inflection was computed over.
    """

    name: str
    adstocked: np.ndarray
    saturated: np.ndarray
    immediate_adstocked: np.ndarray
    immediate_saturated: np.ndarray
    inflection: float
    lag_weights: np.ndarray
    adstock_params: AdstockParams
    saturation_params: SaturationParams


def transform_channel(
    x,
    adstock_params: AdstockParams,
    saturation_params: SaturationParams,
    window_mask: np.ndarray | None = None,
    name: str = "",
) -> TransformedChannel:
    """Adstock then saturate one channel.

    The Hill inflection is computed over the in-window adstocked values; the
    immediate series keeps only the lag-0 weight and is saturated with the
    same inflection so total - immediate is the carryover contribution.
    """
    x = np.asarray(x, dtype=float)
    adstocked = adstock(x, adstock_params)
    if window_mask is None:
        window_mask = np.ones(len(x), dtype=bool)
    window_vals = adstocked[window_mask]
    lo, hi = float(window_vals.min()), float(window_vals.max())
    if hi <= lo:
        raise TransformError(f"channel {name!r}: constant adstocked series in window")
    inflection = lo + saturation_params.gamma * (hi - lo)
    saturated = hill(adstocked, saturation_params.alpha, inflection)
    weights = lag_weights(adstock_params, len(x))
    immediate = x * weights[0]
    immediate_saturated = hill(immediate, saturation_params.alpha, inflection)
    return TransformedChannel(
        name=name,
        adstocked=adstocked,
        saturated=saturated,
        immediate_adstocked=immediate,
        immediate_saturated=immediate_saturated,
        inflection=inflection,
        lag_weights=weights,
        adstock_params=adstock_params,
        saturation_params=saturation_params,
    )


def default_max_lag(frequency: str, n_in_window: int) -> int:
    """Weibull convolution window: full window for weekly data, 60 for daily."""
    return n_in_window if frequency == "weekly" else 60
