"""Time the lattice-point box filter on the numba and numpy paths.

Run: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from asymptheta import _kernels


def _simplex_system(d: int, k: int):
    a = np.vstack([np.eye(d, dtype=np.int64), -np.ones((1, d), dtype=np.int64)])
    b = np.array([0] * d + [-k], dtype=np.int64)
    lo = np.zeros(d, dtype=np.int64)
    hi = np.full(d, k, dtype=np.int64)
    return a, b, lo, hi


def _best(fn, *args, reps: int = 3) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    print(f"numba available: {_kernels.NUMBA_AVAILABLE}")
    print(f"{'d':>2} {'k':>5} {'box':>10} {'points':>9} {'numpy s':>9} {'numba s':>9}")
    for d, k in [(2, 100), (2, 1000), (3, 60), (3, 150), (4, 30)]:
        args = _simplex_system(d, k)
        n_np = len(_kernels._filter_numpy(*args))
        t_np = _best(_kernels._filter_numpy, *args)
        if _kernels.NUMBA_AVAILABLE:
            _kernels._filter_numba(*args)  # compile
            n_nb = len(_kernels._filter_numba(*args))
            assert n_nb == n_np
            t_nb = f"{_best(_kernels._filter_numba, *args):9.4f}"
        else:
            t_nb = f"{'n/a':>9}"
        print(f"{d:>2} {k:>5} {(k + 1) ** d:>10} {n_np:>9} {t_np:9.4f} {t_nb}")


if __name__ == "__main__":
    main()
