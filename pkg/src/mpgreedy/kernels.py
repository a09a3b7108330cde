"""Batch evaluation kernels.

Every kernel takes ``rows``, an ``(N, L)`` int64 array of element ids where
negative entries are padding and are skipped wherever they occur. Each row
is one candidate subset; the kernels return one value per row.

Two implementations exist for each kernel: a loop kernel compiled with
numba and a vectorized numpy kernel. :data:`mpgreedy._backend.BACKEND`
decides which one the public ``coverage_gains`` / ``logdet_rows`` names
point to. Both are importable directly for cross-checking and benchmarks.
"""

import numpy as np

from ._backend import HAS_NUMBA, USE_NUMBA


def coverage_gains_numpy(dense, weights, base_covered, rows):
    """Weight of cells covered by each row and not already in ``base_covered``.

    ``dense`` is the ``(E, C)`` boolean element/cell incidence matrix.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    valid = rows >= 0
    picked = dense[np.where(valid, rows, 0)] & valid[:, :, None]
    covered = picked.any(axis=1) & ~base_covered
    return covered.astype(np.int64) @ weights


def logdet_rows_numpy(base_mat, infos, in_base, rows):
    """log det(base_mat + sum of infos[s] for s in row, s not in base), per row.

    Rows must not contain repeated ids. Returns NaN everywhere when any row
    fails to factor.
    """
    rows = np.asarray(rows, dtype=np.int64)
    n_rows = rows.shape[0]
    if n_rows == 0:
        return np.zeros(0)
    valid = rows >= 0
    safe = np.where(valid, rows, 0)
    keep = valid & ~in_base[safe]
    mats = base_mat + (infos[safe] * keep[:, :, None, None]).sum(axis=1)
    try:
        chol = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        return np.full(n_rows, np.nan)
    return 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)


if HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def coverage_gains_numba(indptr, indices, weights, base_covered, rows):
        n_rows, width = rows.shape
        out = np.zeros(n_rows, dtype=np.int64)
        seen = np.zeros(weights.shape[0], dtype=np.bool_)
        for r in range(n_rows):
            total = 0
            for j in range(width):
                e = rows[r, j]
                if e < 0:
                    continue
                for p in range(indptr[e], indptr[e + 1]):
                    c = indices[p]
                    if not base_covered[c] and not seen[c]:
                        seen[c] = True
                        total += weights[c]
            out[r] = total
            # undo only the cells touched by this row
            for j in range(width):
                e = rows[r, j]
                if e < 0:
                    continue
                for p in range(indptr[e], indptr[e + 1]):
                    seen[indices[p]] = False
        return out

    @njit(cache=True)
    def logdet_rows_numba(base_mat, infos, in_base, rows):
        n_rows, width = rows.shape
        d = base_mat.shape[0]
        out = np.empty(n_rows)
        mat = np.empty((d, d))
        for r in range(n_rows):
            for a in range(d):
                for b in range(d):
                    mat[a, b] = base_mat[a, b]
            for j in range(width):
                e = rows[r, j]
                if e < 0 or in_base[e]:
                    continue
                for a in range(d):
                    for b in range(d):
                        mat[a, b] += infos[e, a, b]
            # in-place lower Cholesky
            logdet = 0.0
            ok = True
            for i in range(d):
                for jj in range(i + 1):
                    s = mat[i, jj]
                    for p in range(jj):
                        s -= mat[i, p] * mat[jj, p]
                    if i == jj:
                        if not s > 0.0:
                            ok = False
                            break
                        mat[i, i] = np.sqrt(s)
                        logdet += np.log(mat[i, i])
                    else:
                        mat[i, jj] = s / mat[jj, jj]
                if not ok:
                    break
            out[r] = 2.0 * logdet if ok else np.nan
        return out

else:  # pragma: no cover
    coverage_gains_numba = None
    logdet_rows_numba = None


def coverage_gains(csr, dense, weights, base_covered, rows):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if USE_NUMBA:
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return coverage_gains_numba(csr[0], csr[1], weights, base_covered, rows)
    return coverage_gains_numpy(dense, weights, base_covered, rows)


def logdet_rows(base_mat, infos, in_base, rows):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if USE_NUMBA:
        if rows.shape[0] == 0:
            return np.zeros(0)
        return logdet_rows_numba(base_mat, infos, in_base, rows)
    return logdet_rows_numpy(base_mat, infos, in_base, rows)
