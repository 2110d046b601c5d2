"""Compare the jit-compiled LCS kernel against the pure-numpy fallback.

Usage: python benchmarks/bench_diff.py [n_lines ...]

The same workload (a file with scattered edits) is diffed through both row
kernels; results are checked for agreement before timings are reported.
Set TRACEWEAVE_PURE_NUMPY=1 to see what the installed package would use.
"""
from __future__ import annotations

import random
import sys
import time

import numpy as np

from traceweave import linediff
from traceweave._accel import HAVE_NUMBA, _lcs_last_row_jit, _lcs_last_row_numpy, backend_name


def make_workload(n_lines: int, seed: int = 1) -> tuple[list[str], list[str]]:
    rng = random.Random(seed)
    old = [f"line {i}: value = {rng.randint(0, 9)}" for i in range(n_lines)]
    new = list(old)
    for _ in range(max(1, n_lines // 20)):  # ~5% edits, scattered
        op = rng.random()
        pos = rng.randrange(max(1, len(new)))
        if op < 0.4:
            new[pos] = f"line {pos}: value = changed_{rng.randint(0, 999)}"
        elif op < 0.7:
            new.insert(pos, f"inserted {rng.randint(0, 999)}")
        elif len(new) > 1:
            del new[pos]
    return old, new


def time_diff(kernel, old: list[str], new: list[str], repeats: int = 5) -> float:
    linediff.lcs_last_row = kernel
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        linediff.diff_lines(old, new)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> int:
    sizes = [int(a) for a in sys.argv[1:]] or [200, 1000, 5000, 20000]
    print(f"active backend for installed package: {backend_name()}")
    if not HAVE_NUMBA:
        print("numba unavailable (or disabled); timing the numpy path against itself")

    # Agreement check on a random pair before any timing.
    rng = np.random.default_rng(0)
    a = rng.integers(0, 50, size=400).astype(np.int64)
    b = rng.integers(0, 50, size=400).astype(np.int64)
    assert np.array_equal(_lcs_last_row_jit(a, b), _lcs_last_row_numpy(a, b))

    print(f"{'lines':>8} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>9}")
    original = linediff.lcs_last_row
    try:
        for n in sizes:
            old, new = make_workload(n)
            jit_s = time_diff(_lcs_last_row_jit, old, new)
            np_s = time_diff(_lcs_last_row_numpy, old, new)
            speedup = np_s / jit_s if jit_s > 0 else float("inf")
            print(f"{n:>8} {jit_s * 1e3:>12.2f} {np_s * 1e3:>12.2f} {speedup:>8.1f}x")
    finally:
        linediff.lcs_last_row = original
    return 0


if __name__ == "__main__":
    sys.exit(main())
