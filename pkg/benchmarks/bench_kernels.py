"""Time the numba kernels against the numpy fallbacks on enumeration-sized batches.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from mpgreedy import kernels
from mpgreedy.setcore import map_pattern, subset_pattern


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def coverage_case(n_elems, n_cells, size, rng):
    dense = rng.random((n_elems, n_cells)) < 0.2
    weights = rng.integers(1, 4, size=n_cells).astype(np.int64)
    base = rng.random(n_cells) < 0.1
    pattern, _ = subset_pattern(n_elems, size)
    rows = np.ascontiguousarray(map_pattern(range(n_elems), pattern))
    indptr = np.concatenate([[0], np.cumsum(dense.sum(axis=1))]).astype(np.int64)
    indices = np.concatenate([np.flatnonzero(r) for r in dense]).astype(np.int64)
    return (indptr, indices), dense, weights, base, rows


def logdet_case(n_elems, dim, size, rng):
    infos = np.zeros((n_elems, dim, dim))
    for s in range(n_elems):
        v = rng.normal(size=(dim, 1))
        infos[s] = v @ v.T
    pattern, _ = subset_pattern(n_elems, size)
    rows = np.ascontiguousarray(map_pattern(range(n_elems), pattern))
    return 0.01 * np.eye(dim), infos, np.zeros(n_elems, dtype=bool), rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<10} {'case':<24} {'rows':>8} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}  agree")
    for n_elems, n_cells, size in [(12, 40, 3), (20, 60, 4), (30, 100, 4)]:
        csr, dense, w, base, rows = coverage_case(n_elems, n_cells, size, rng)
        kernels.coverage_gains_numba(csr[0], csr[1], w, base, rows[:2])  # compile
        t_np, a = best_of(lambda: kernels.coverage_gains_numpy(dense, w, base, rows), args.repeat)
        t_nb, b = best_of(lambda: kernels.coverage_gains_numba(csr[0], csr[1], w, base, rows), args.repeat)
        case = f"E={n_elems} C={n_cells} l<={size}"
        print(f"{'coverage':<10} {case:<24} {len(rows):>8} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} "
              f"{t_np / t_nb:>8.1f}  {np.array_equal(a, b)}")
    for n_elems, dim, size in [(12, 6, 3), (20, 6, 3), (30, 6, 3)]:
        base_mat, infos, in_base, rows = logdet_case(n_elems, dim, size, rng)
        kernels.logdet_rows_numba(base_mat, infos, in_base, rows[:2])
        t_np, a = best_of(lambda: kernels.logdet_rows_numpy(base_mat, infos, in_base, rows), args.repeat)
        t_nb, b = best_of(lambda: kernels.logdet_rows_numba(base_mat, infos, in_base, rows), args.repeat)
        case = f"E={n_elems} d={dim} l<={size}"
        print(f"{'logdet':<10} {case:<24} {len(rows):>8} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} "
              f"{t_np / t_nb:>8.1f}  {np.allclose(a, b, atol=1e-9)}")


if __name__ == "__main__":
    main()
