"""Integer box filtering: lattice points of a box satisfying A x >= b.

A numba kernel is used when numba is importable and ASYMPTHETA_DISABLE_NUMBA is
unset; otherwise a vectorised numpy path runs.  Both paths operate on int64 and
fall back to Python integers when the data could overflow.
"""

from __future__ import annotations

import itertools
import os
from typing import Sequence

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap(args[0]) if args and callable(args[0]) else wrap


_INT64_SAFE = 2**62


def numba_enabled() -> bool:
    return NUMBA_AVAILABLE and os.environ.get("ASYMPTHETA_DISABLE_NUMBA", "") not in ("1", "true", "yes")


@njit(cache=True)
def _count_and_fill(a, b, lo, hi, out):
    m, d = a.shape
    sizes = hi - lo + 1
    total = 1
    for j in range(d):
        total *= sizes[j]
    pt = np.empty(d, dtype=np.int64)
    n = 0
    for idx in range(total):
        rem = idx
        for j in range(d - 1, -1, -1):
            pt[j] = lo[j] + rem % sizes[j]
            rem //= sizes[j]
        ok = True
        for i in range(m):
            s = 0
            for j in range(d):
                s += a[i, j] * pt[j]
            if s < b[i]:
                ok = False
                break
        if ok:
            if out.shape[0] > 0:
                for j in range(d):
                    out[n, j] = pt[j]
            n += 1
    return n


NUMBA_MIN_POINTS = 200_000


def _filter_numba(a, b, lo, hi):
    d = a.shape[1]
    empty = np.empty((0, d), dtype=np.int64)
    n = _count_and_fill(a, b, lo, hi, empty)
    out = np.empty((n, d), dtype=np.int64)
    _count_and_fill(a, b, lo, hi, out)
    return out


def _filter_numpy(a, b, lo, hi):
    axes = [np.arange(l, h + 1, dtype=np.int64) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    if a.shape[0] == 0:
        return grid
    mask = np.all(grid @ a.T >= b, axis=1)
    return grid[mask]


def _filter_python(a, b, lo, hi):
    out = []
    for pt in itertools.product(*[range(l, h + 1) for l, h in zip(lo, hi)]):
        if all(sum(x * y for x, y in zip(row, pt)) >= bi for row, bi in zip(a, b)):
            out.append(pt)
    return out


def filter_box(a: Sequence[Sequence[int]], b: Sequence[int], lo: Sequence[int], hi: Sequence[int]) -> list[tuple[int, ...]]:
    """All integer points x with lo <= x <= hi and a x >= b, in lexicographic order."""
    d = len(lo)
    if any(h < l for l, h in zip(lo, hi)):
        return []
    if d == 0:
        return [()] if all(bi <= 0 for bi in b) else []
    bound = max([abs(int(x)) for x in lo] + [abs(int(x)) for x in hi] + [1])
    amax = max([abs(int(x)) for row in a for x in row] + [1])
    bmax = max([abs(int(x)) for x in b] + [0])
    if amax * bound * d >= _INT64_SAFE or bmax >= _INT64_SAFE:
        return [tuple(p) for p in _filter_python(a, b, lo, hi)]
    an = np.array(a, dtype=np.int64).reshape(len(b), d)
    bn = np.array(b, dtype=np.int64)
    lon = np.array(lo, dtype=np.int64)
    hin = np.array(hi, dtype=np.int64)
    size = 1
    for l, h in zip(lo, hi):
        size *= h - l + 1
    # small boxes are cheaper in numpy than the one-off cost of loading compiled code
    use_numba = numba_enabled() and size >= NUMBA_MIN_POINTS
    pts = _filter_numba(an, bn, lon, hin) if use_numba else _filter_numpy(an, bn, lon, hin)
    return [tuple(int(x) for x in row) for row in pts]
