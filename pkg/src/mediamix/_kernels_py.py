"""Pure NumPy/SciPy implementations of the numerical kernels.

These are the fallback backend for :mod:`mediamix.kernels`; the Cython
extension ``mediamix._fastkernels`` implements the same three functions
with identical semantics.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter


def geometric_adstock(x: np.ndarray, theta: float) -> np.ndarray:
    """First-order carryover recursion x'_t = x_t + theta * x'_{t-1}."""
    x = np.asarray(x, dtype=np.float64)
    return lfilter([1.0], [1.0, -theta], x)


def lagged_convolve(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Causal convolution: out_t = sum_l weights[l] * x[t-l], truncated at t=0."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    return np.convolve(x, weights)[: x.shape[0]]


def ridge_cd(
    Z: np.ndarray,
    y: np.ndarray,
    lam: float,
    nonneg: np.ndarray,
    max_sweeps: int = 1000,
    tol: float = 1e-7,
) -> tuple[np.ndarray, int, bool]:
    """Cyclic coordinate descent for ridge with optional lower bounds at zero.

    Minimizes ||y - Z beta||^2 + lam * ||beta||^2 with beta_j >= 0 where
    nonneg[j] is set.  y is expected pre-centered; no intercept column.
    Returns (beta, sweeps_used, converged).
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nonneg = np.asarray(nonneg, dtype=bool)
    n, p = Z.shape
    beta = np.zeros(p)
    resid = y.copy()
    col_ss = np.einsum("ij,ij->j", Z, Z)
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            denom = col_ss[j] + lam
            if denom == 0.0:
                continue
            b_old = beta[j]
            rho = Z[:, j] @ resid + col_ss[j] * b_old
            b_new = rho / denom
            if nonneg[j] and b_new < 0.0:
                b_new = 0.0
            if b_new != b_old:
                resid -= (b_new - b_old) * Z[:, j]
                beta[j] = b_new
            delta = abs(b_new - b_old)
            if delta > max_delta:
                max_delta = delta
        if max_delta < tol:
            return beta, sweep + 1, True
    return beta, max_sweeps, False
