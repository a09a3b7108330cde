"""Concrete objectives: weighted cell coverage and log-det Fisher information."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import NotPositiveDefinite
from .setcore import SetFunction

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9


class CoverageFunction(SetFunction):
    """``f(A)`` = total weight of the cells covered by the elements of ``A``.

    ``cells`` is a sequence of ``(cell_id, weight)`` pairs with positive
    integer or rational weights; ``element_cells[s]`` lists the cell ids of
    element ``s``. Evaluation is exact: integer weights give ``int`` values,
    rational weights give :class:`~fractions.Fraction` values.
    """

    exact = True
    tol = 0

    def __init__(self, cells: Sequence[tuple], element_cells: Sequence[Iterable]):
        super().__init__(len(element_cells))
        self.cell_ids = [c for c, _ in cells]
        if len(set(self.cell_ids)) != len(self.cell_ids):
            raise ValueError("duplicate cell id")
        weights = [Fraction(w) for _, w in cells]
        if any(w <= 0 for w in weights):
            raise ValueError("cell weights must be positive")
        self.weights = weights
        self.denominator = lcm(*(w.denominator for w in weights)) if weights else 1
        self._raw = np.array([int(w * self.denominator) for w in weights], dtype=np.int64)
        pos = {c: i for i, c in enumerate(self.cell_ids)}
        try:
            self.element_cells = [frozenset(pos[c] for c in cs) for cs in element_cells]
        except KeyError as exc:
            raise ValueError(f"unknown cell id {exc.args[0]!r}") from None
        n_cells = len(self.cell_ids)
        self._dense = np.zeros((self.ground_size, n_cells), dtype=bool)
        indptr = [0]
        indices = []
        for s, cs in enumerate(self.element_cells):
            ordered = sorted(cs)
            self._dense[s, ordered] = True
            indices.extend(ordered)
            indptr.append(len(indices))
        self._csr = (np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64))

    @classmethod
    def unit(cls, element_cells: Sequence[Iterable]) -> "CoverageFunction":
        """Unit-weight coverage over the cells mentioned in ``element_cells``."""
        ids = sorted({c for cs in element_cells for c in cs})
        return cls([(c, 1) for c in ids], element_cells)

    @classmethod
    def from_intervals(cls, intervals: Sequence[tuple]) -> "CoverageFunction":
        """Boxes on a line: element ``s`` covers the unit cells ``start .. end - 1``.

        ``f(A)`` is then the total horizontal length covered by the boxes in ``A``.
        """
        cells = [list(range(int(a), int(b))) for a, b in intervals]
        if any(not c for c in cells):
            raise ValueError("every interval needs positive integer length")
        return cls.unit(cells)

    @property
    def n_cells(self) -> int:
        return len(self.cell_ids)

    def to_value(self, raw):
        raw = int(raw)
        if self.denominator == 1:
            return raw
        return Fraction(raw, self.denominator)

    def covered(self, A: Iterable[int]) -> frozenset:
        """Cell ids covered by ``A``."""
        idx = set()
        for s in A:
            idx |= self.element_cells[s]
        return frozenset(self.cell_ids[i] for i in idx)

    def evaluate(self, A: Iterable[int]):
        idx = set()
        for s in A:
            idx |= self.element_cells[s]
        return self.to_value(sum(int(self._raw[i]) for i in idx))

    def _base_mask(self, base) -> np.ndarray:
        mask = np.zeros(self.n_cells, dtype=bool)
        for s in base:
            mask[list(self.element_cells[s])] = True
        return mask

    def raw_gains(self, base, rows) -> np.ndarray:
        return kernels.coverage_gains(self._csr, self._dense, self._raw, self._base_mask(base), rows)

    def to_json(self) -> dict:
        def enc(w: Fraction):
            return w.numerator if w.denominator == 1 else f"{w.numerator}/{w.denominator}"

        return {
            "cells": [{"id": c, "weight": enc(w)} for c, w in zip(self.cell_ids, self.weights)],
            "elements": [sorted(self.cell_ids[i] for i in cs) for cs in self.element_cells],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CoverageFunction":
        cells = [(c["id"], Fraction(c["weight"]) if isinstance(c["weight"], str) else c["weight"])
                 for c in obj["cells"]]
        return cls(cells, obj["elements"])


def validate_info_matrix(mat, name: str = "matrix") -> np.ndarray:
    """Return ``mat`` as a float array after symmetry and PSD checks."""
    mat = np.array(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError(f"{name} is not symmetric")
    if mat.size and np.linalg.eigvalsh(mat).min() < -PSD_TOL:
        raise NotPositiveDefinite(f"{name} is not positive semi-definite")
    return mat


def _cholesky_logdet(mat: np.ndarray, what: str) -> float:
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{what} is not positive definite") from None
    return 2.0 * float(np.log(np.diag(chol)).sum())


def _dedupe_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.sort(np.asarray(rows, dtype=np.int64), axis=1)
    if rows.shape[1] > 1:
        dup = np.zeros(rows.shape, dtype=bool)
        dup[:, 1:] = (rows[:, 1:] == rows[:, :-1]) & (rows[:, 1:] >= 0)
        rows[dup] = -1
    return rows


class LogDetFunction(SetFunction):
    """``f(A) = log det(Q0 + sum_{s in A} Q_s) - log det(Q0)``.

    ``Q0`` must be positive definite and every ``Q_s`` positive
    semi-definite; both are validated once at construction.
    """

    tol = 1e-9

    def __init__(self, Q0, element_info: Sequence):
        Q0 = validate_info_matrix(Q0, "Q0")
        self.dim = Q0.shape[0]
        super().__init__(len(element_info))
        infos = np.zeros((len(element_info), self.dim, self.dim))
        for s, q in enumerate(element_info):
            q = validate_info_matrix(q, f"Q_{s}")
            if q.shape != Q0.shape:
                raise ValueError(f"Q_{s} has shape {q.shape}, expected {Q0.shape}")
            infos[s] = q
        self.Q0 = Q0
        self.infos = infos
        self.logdet_Q0 = _cholesky_logdet(Q0, "Q0")

    def information(self, A: Iterable[int]) -> np.ndarray:
        mat = self.Q0.copy()
        for s in sorted(set(A)):
            mat += self.infos[s]
        return mat

    def evaluate(self, A: Iterable[int]) -> float:
        return _cholesky_logdet(self.information(A), "Q0 + sum Q_s") - self.logdet_Q0

    def raw_gains(self, base, rows) -> np.ndarray:
        base = frozenset(base)
        base_mat = self.information(base)
        f_base = _cholesky_logdet(base_mat, "Q0 + sum Q_s")
        in_base = np.zeros(self.ground_size, dtype=bool)
        in_base[list(base)] = True
        vals = kernels.logdet_rows(base_mat, self.infos, in_base, _dedupe_rows(rows))
        if np.isnan(vals).any():
            raise NotPositiveDefinite("Q0 + sum Q_s is not positive definite")
        return vals - f_base

    def to_json(self) -> dict:
        return {"Q0": self.Q0.tolist(), "elements": [q.tolist() for q in self.infos]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "LogDetFunction":
        return cls(obj["Q0"], obj["elements"])
