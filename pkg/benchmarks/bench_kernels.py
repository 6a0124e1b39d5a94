"""Benchmark the compiled kernels against the pure-Python fallback.

Run with: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from mediamix import _kernels_py

try:
    from mediamix import _fastkernels
except ImportError:
    _fastkernels = None


def timeit(fn, *args, repeat=200):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench(name, fn_name, *args, repeat=200):
    py = timeit(getattr(_kernels_py, fn_name), *args, repeat=repeat)
    line = f"{name:30s} python {py * 1e6:10.1f} us"
    if _fastkernels is not None:
        cy = timeit(getattr(_fastkernels, fn_name), *args, repeat=repeat)
        line += f"   cython {cy * 1e6:10.1f} us   speedup {py / cy:5.1f}x"
    print(line)


def main():
    rng = np.random.default_rng(0)
    x = rng.lognormal(size=208)
    weights = np.exp(-((np.arange(60) / 8.0) ** 1.5))
    Z = rng.standard_normal((146, 12))
    Z = (Z - Z.mean(axis=0)) / Z.std(axis=0)
    y = Z @ rng.standard_normal(12) + 0.1 * rng.standard_normal(146)
    nonneg = np.zeros(12, dtype=np.uint8)
    nonneg[:6] = 1

    if _fastkernels is None:
        print("compiled extension not available; timing fallback only")
    bench("geometric_adstock n=208", "geometric_adstock", x, 0.5)
    bench("lagged_convolve n=208 L=60", "lagged_convolve", x, weights)
    bench("ridge_cd 146x12", "ridge_cd", Z, y, 5.0, nonneg, repeat=50)


if __name__ == "__main__":
    main()
