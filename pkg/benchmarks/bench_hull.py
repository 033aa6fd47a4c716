"""Timing comparison of the hull kernels behind the fit.

Runs the compiled extension and the pure-Python fallback on identical
inputs across a range of sizes and prints per-call times and the
speedup. The two must agree bit for bit, which is asserted on the way.

Usage: python3 benchmarks/bench_hull.py [--sizes 1000,10000,...]
"""

import argparse
import time

import numpy as np

from grenlim._kernel import BACKEND
from grenlim._kernel._hull_py import upper_hull_indices as hull_py
from grenlim.rng import stream

try:
    from grenlim._kernel._hull import upper_hull_indices as hull_c
except ImportError:
    hull_c = None


def make_instance(n, rng):
    # ECDF-of-decreasing-density shape: concave trend plus noise
    x = np.sort(rng.uniform(0.0, 1.0, n))
    y = np.sqrt(x) + rng.normal(0.0, 0.01, n)
    y[0] = 0.0
    return x, y


def time_one(fn, x, y, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(x, y)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="1000,10000,100000,1000000")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {BACKEND}")
    if hull_c is None:
        print("compiled kernel unavailable; timing the fallback only")
    rng = stream(2024)
    header = f"{'n':>9} {'python (ms)':>12}"
    if hull_c is not None:
        header += f" {'compiled (ms)':>14} {'speedup':>8}"
    print(header)
    for n in sizes:
        x, y = make_instance(n, rng)
        repeats = max(3, int(2e5 / n))
        tp = time_one(hull_py, x, y, repeats)
        row = f"{n:>9} {1000 * tp:>12.3f}"
        if hull_c is not None:
            assert np.array_equal(hull_c(x, y), hull_py(x, y))
            tc = time_one(hull_c, x, y, repeats)
            row += f" {1000 * tc:>14.3f} {tp / tc:>8.1f}"
        print(row)


if __name__ == "__main__":
    main()
