# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: adstock recursion/convolution and bounded ridge CD."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def geometric_adstock(x, double theta):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t
    cdef double carry = 0.0
    for t in range(n):
        carry = xv[t] + theta * carry
        out[t] = carry
    return out_arr


def lagged_convolve(x, weights):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t L = wv.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t, l, lmax
    cdef double acc
    for t in range(n):
        lmax = t + 1 if t + 1 < L else L
        acc = 0.0
        for l in range(lmax):
            acc += wv[l] * xv[t - l]
        out[t] = acc
    return out_arr


def ridge_cd(Z, y, double lam, nonneg, int max_sweeps=1000, double tol=1e-7):
    cdef double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.uint8_t[::1] nn = np.ascontiguousarray(nonneg, dtype=np.uint8)
    cdef Py_ssize_t n = Zv.shape[0]
    cdef Py_ssize_t p = Zv.shape[1]
    beta_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] beta = beta_arr
    resid_arr = np.array(yv, dtype=np.float64, copy=True)
    cdef double[::1] resid = resid_arr
    col_ss_arr = np.einsum("ij,ij->j", np.asarray(Zv), np.asarray(Zv))
    cdef double[::1] col_ss = col_ss_arr
    cdef Py_ssize_t sweep, j, i
    cdef double max_delta, denom, b_old, rho, b_new, delta, step
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            denom = col_ss[j] + lam
            if denom == 0.0:
                continue
            b_old = beta[j]
            rho = col_ss[j] * b_old
            for i in range(n):
                rho += Zv[i, j] * resid[i]
            b_new = rho / denom
            if nn[j] and b_new < 0.0:
                b_new = 0.0
            if b_new != b_old:
                step = b_new - b_old
                for i in range(n):
                    resid[i] -= step * Zv[i, j]
                beta[j] = b_new
            delta = b_new - b_old
            if delta < 0.0:
                delta = -delta
            if delta > max_delta:
                max_delta = delta
        if max_delta < tol:
            return beta_arr, sweep + 1, True
    return beta_arr, max_sweeps, False
