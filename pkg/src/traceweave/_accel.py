"""JIT-compiled inner loops with a pure-numpy fallback.

The line diff spends essentially all of its time sweeping LCS dynamic-
programming rows. When numba is importable (and TRACEWEAVE_PURE_NUMPY is not
set) the sweep runs as an @njit scalar loop; otherwise a vectorized numpy
formulation of the same recurrence is used. Both paths are exercised by the
test suite and compared by benchmarks/bench_diff.py.
"""
from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("TRACEWEAVE_PURE_NUMPY", "") not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError("pure-numpy path forced via TRACEWEAVE_PURE_NUMPY")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _lcs_last_row_jit(a, b):  # pragma: no cover - covered via dispatch
    m = b.shape[0]
    row = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        diag = row[0]
        for j in range(1, m + 1):
            tmp = row[j]
            if a[i] == b[j - 1]:
                cand = diag + 1
            else:
                cand = 0
            if cand < row[j]:
                cand = row[j]
            if cand < row[j - 1]:
                cand = row[j - 1]
            row[j] = cand
            diag = tmp
    return row


def _lcs_last_row_numpy(a, b):
    # Same recurrence, row-vectorized. row_new is nondecreasing in j, so
    # max(row_old[j], row_old[j-1] + eq[j]) followed by a running maximum
    # reproduces the scalar loop exactly.
    m = b.shape[0]
    row = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        h = np.maximum(row[1:], row[:-1] + (b == a[i]))
        np.maximum.accumulate(h, out=h)
        row[1:] = h
    return row


if HAVE_NUMBA:
    lcs_last_row = _lcs_last_row_jit
else:
    lcs_last_row = _lcs_last_row_numpy


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
