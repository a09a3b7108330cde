"""Ground sets, the set-function contract, marginal gains and property checks.

Elements are dense integer ids ``0 .. ground_size - 1`` and an element set
is a ``frozenset`` of them. All tie-breaking in this package compares the
ascending id sequences of candidate sets lexicographically.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Any, Callable, Iterable

import numpy as np

from .errors import BudgetExceeded

ElementSet = frozenset

BUDGET_ENV_VAR = "MPGREEDY_MAX_SUBSETS"
DEFAULT_EXHAUSTIVE_CAP = 14


def element_set(ids: Iterable[int] = ()) -> frozenset:
    return frozenset(int(i) for i in ids)


def sorted_ids(ids: Iterable[int]) -> tuple:
    return tuple(sorted(int(i) for i in ids))


@dataclass(frozen=True)
class EvalBudget:
    """Caps on a single exhaustive search.

    ``max_subsets_enumerated`` bounds how many candidate subsets (or
    profiles) one operation may enumerate; ``max_oracle_calls`` bounds the
    number of set evaluations it may issue. Exceeding either raises
    :class:`BudgetExceeded`.
    """

    max_subsets_enumerated: int = 10_000_000
    max_oracle_calls: int = 100_000_000

    def __post_init__(self):
        if self.max_subsets_enumerated <= 0 or self.max_oracle_calls <= 0:
            raise ValueError("budget limits must be positive")

    def require(self, n_subsets: int, what: str = "enumeration") -> None:
        if n_subsets > self.max_subsets_enumerated:
            raise BudgetExceeded(
                f"{what} needs {n_subsets} subsets, budget is {self.max_subsets_enumerated}"
            )
        if n_subsets > self.max_oracle_calls:
            raise BudgetExceeded(
                f"{what} needs {n_subsets} oracle calls, budget is {self.max_oracle_calls}"
            )


def default_budget() -> EvalBudget:
    """Budget with the subset cap taken from ``MPGREEDY_MAX_SUBSETS`` if set."""
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw:
        return EvalBudget(max_subsets_enumerated=int(raw))
    return EvalBudget()


class SetFunction:
    """A set function ``f: 2^S -> R`` over the ground set ``range(ground_size)``.

    Subclasses implement :meth:`evaluate` and, for speed, :meth:`raw_gains`.
    Values handed between the search routines are "raw" numbers; for most
    objectives raw equals the value, but exact objectives may use scaled
    integers and convert back with :meth:`to_value`. ``tol`` is the absolute
    raw tolerance used when comparing values (0 for exact objectives).
    """

    tol: float = 1e-9
    exact: bool = False

    def __init__(self, ground_size: int):
        if ground_size < 0:
            raise ValueError("ground_size must be non-negative")
        self.ground_size = int(ground_size)

    def evaluate(self, A: Iterable[int]):
        raise NotImplementedError

    def __call__(self, A: Iterable[int]):
        return self.evaluate(A)

    def to_value(self, raw):
        return raw

    def raw_gains(self, base: frozenset, rows: np.ndarray) -> np.ndarray:
        """``f(row | base) - f(base)`` in raw units for every row of ``rows``."""
        f_base = self.evaluate(base)
        out = []
        for row in np.asarray(rows):
            members = set(base)
            members.update(int(e) for e in row if e >= 0)
            out.append(self.evaluate(members) - f_base)
        return np.array(out) if out else np.zeros(0)

    def raw_values(self, rows: np.ndarray) -> np.ndarray:
        return self.raw_gains(frozenset(), rows)

    def check_ids(self, A: Iterable[int]) -> None:
        for e in A:
            if not 0 <= e < self.ground_size:
                raise ValueError(f"element {e} outside ground set of size {self.ground_size}")


class OracleFunction(SetFunction):
    """Wrap a plain Python callable on frozensets as a :class:`SetFunction`."""

    def __init__(self, ground_size: int, fn: Callable[[frozenset], Any], exact: bool = False):
        super().__init__(ground_size)
        self._fn = fn
        self.exact = exact
        self.tol = 0 if exact else 1e-9

    def evaluate(self, A):
        return self._fn(frozenset(A))


@lru_cache(maxsize=512)
def subset_pattern(n_items: int, max_size: int, min_size: int = 0):
    """Index rows for all subsets of ``range(n_items)`` with sizes in ``[min_size, max_size]``.

    Rows are ordered by size, then lexicographically; ``-1`` pads short rows.
    Returns ``(pattern, sizes)``, both read-only.
    """
    max_size = min(max_size, n_items)
    width = max(max_size, 1)
    rows = []
    sizes = []
    for size in range(min_size, max_size + 1):
        for combo in itertools.combinations(range(n_items), size):
            rows.append(combo + (-1,) * (width - size))
            sizes.append(size)
    pattern = np.array(rows, dtype=np.int64).reshape(len(rows), width)
    sizes = np.array(sizes, dtype=np.int64)
    pattern.setflags(write=False)
    sizes.setflags(write=False)
    return pattern, sizes


def count_subsets(n_items: int, max_size: int, min_size: int = 0) -> int:
    return sum(comb(n_items, j) for j in range(min_size, min(max_size, n_items) + 1))


def map_pattern(items: Iterable[int], pattern: np.ndarray) -> np.ndarray:
    """Replace position indices in ``pattern`` by the ids in ``items``."""
    ext = np.append(np.asarray(sorted_ids(items), dtype=np.int64), -1)
    return ext[pattern]


def argmax_subset(f: SetFunction, items, l: int, base: frozenset, budget: EvalBudget | None = None):
    """Best subset of ``items`` with at most ``l`` members given ``base``.

    Ties (within ``f.tol``) go to the larger set, then to the
    lexicographically smallest ascending id sequence. Returns
    ``(subset, raw_gain)``.
    """
    items = sorted_ids(items)
    if l < 0:
        raise ValueError("l must be non-negative")
    budget = budget or default_budget()
    budget.require(count_subsets(len(items), l), "subset argmax")
    if l == 0 or not items:
        return frozenset(), f.raw_gains(frozenset(base), np.full((1, 1), -1, dtype=np.int64))[0]
    pattern, sizes = subset_pattern(len(items), l)
    rows = map_pattern(items, pattern)
    gains = f.raw_gains(frozenset(base), rows)
    best = gains.max()
    ok = gains >= best - f.tol
    top = sizes[ok].max()
    idx = int(np.flatnonzero(ok & (sizes == top))[0])
    return frozenset(int(e) for e in rows[idx] if e >= 0), gains[idx]


def marginal(f: SetFunction, A: Iterable[int], B: Iterable[int]):
    """Marginal contribution ``f(A | B) - f(B)``."""
    A = frozenset(A)
    B = frozenset(B)
    f.check_ids(A | B)
    return f.evaluate(A | B) - f.evaluate(B)


def best_subset(f: SetFunction, A: Iterable[int], l: int, B: Iterable[int] = (), budget: EvalBudget | None = None):
    """Most valuable subset of ``A`` with at most ``l`` elements, given ``B``.

    Exhaustive over every subset of size ``<= l``. Returns ``(subset, value)``
    where value is ``f(subset | B) - f(B)``.
    """
    A = frozenset(A)
    B = frozenset(B)
    f.check_ids(A | B)
    subset, _ = argmax_subset(f, A, l, B, budget)
    return subset, marginal(f, subset, B)


@dataclass
class CheckResult:
    property: str
    passed: bool
    mode: str
    checked: int = 0
    counterexample: dict | None = field(default=None)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "passed": self.passed,
            "mode": self.mode,
            "checked": self.checked,
            "counterexample": self.counterexample,
        }


def _mask_rows(masks: np.ndarray, n: int) -> np.ndarray:
    bits = (masks[:, None] >> np.arange(n)) & 1
    return np.where(bits == 1, np.arange(n), -1).astype(np.int64)


def _bool_rows(members: np.ndarray) -> np.ndarray:
    n = members.shape[1]
    return np.where(members, np.arange(n), -1).astype(np.int64)


def _all_values(f: SetFunction, cap: int) -> np.ndarray:
    n = f.ground_size
    if n > cap:
        raise BudgetExceeded(f"exhaustive check on {n} elements exceeds cap {cap}")
    masks = np.arange(1 << n, dtype=np.int64)
    rows = _mask_rows(masks, n) if n else np.full((1, 1), -1, dtype=np.int64)
    return f.raw_values(rows)


def _ids(mask: int) -> list:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def _val(f, raw):
    v = f.to_value(raw)
    return v.item() if isinstance(v, np.generic) else v


def check_normalized(f: SetFunction) -> CheckResult:
    value = f.evaluate(frozenset())
    ok = abs(value) <= f.tol
    cex = None if ok else {"A": [], "value": _val(f, value)}
    return CheckResult("normalized", bool(ok), "exhaustive", 1, cex)


def _sample_triples(n: int, n_samples: int, seed: int):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, n, size=n_samples)
    p_b = rng.random((n_samples, 1))
    in_b = rng.random((n_samples, n)) < p_b
    in_b[np.arange(n_samples), s] = False
    p_a = rng.random((n_samples, 1))
    in_a = in_b & (rng.random((n_samples, n)) < p_a)
    return in_a, in_b, s


def check_monotone(f: SetFunction, mode: str = "exhaustive", cap: int = DEFAULT_EXHAUSTIVE_CAP,
                   n_samples: int = 10_000, seed: int = 0) -> CheckResult:
    """Check ``f(A) <= f(B)`` for ``A`` a subset of ``B``.

    Exhaustive mode checks every single-element extension, which implies
    the property for all nested pairs.
    """
    n = f.ground_size
    if mode == "exhaustive":
        vals = _all_values(f, cap)
        idx = np.arange(1 << n, dtype=np.int64)
        checked = 0
        for b in range(n):
            without = idx[(idx >> b) & 1 == 0]
            diff = vals[without | (1 << b)] - vals[without]
            checked += without.size
            bad = np.flatnonzero(diff < -f.tol)
            if bad.size:
                a = int(without[bad[0]])
                cex = {"A": _ids(a), "B": _ids(a | 1 << b),
                       "f_A": _val(f, vals[a]), "f_B": _val(f, vals[a | 1 << b])}
                return CheckResult("monotone", False, mode, checked, cex)
        return CheckResult("monotone", True, mode, checked)
    if mode == "sampled":
        if n == 0:
            return CheckResult("monotone", True, mode, 0)
        in_a, in_b, _ = _sample_triples(n, n_samples, seed)
        va = f.raw_values(_bool_rows(in_a))
        vb = f.raw_values(_bool_rows(in_b))
        bad = np.flatnonzero(vb - va < -f.tol)
        if bad.size:
            i = bad[0]
            cex = {"A": np.flatnonzero(in_a[i]).tolist(), "B": np.flatnonzero(in_b[i]).tolist(),
                   "f_A": _val(f, va[i]), "f_B": _val(f, vb[i])}
            return CheckResult("monotone", False, mode, n_samples, cex)
        return CheckResult("monotone", True, mode, n_samples)
    raise ValueError(f"unknown mode {mode!r}")


def check_submodular(f: SetFunction, mode: str = "exhaustive", cap: int = DEFAULT_EXHAUSTIVE_CAP,
                     n_samples: int = 10_000, seed: int = 0) -> CheckResult:
    """Check diminishing returns ``f(A+s) - f(A) >= f(B+s) - f(B)``.

    Exhaustive mode checks the equivalent pairwise condition
    ``f(A+s) + f(A+t) >= f(A+s+t) + f(A)`` for every ``A`` and ``s, t`` not
    in ``A``; a failure is reported as the triple ``(A, A+t, s)``.
    """
    n = f.ground_size
    if mode == "exhaustive":
        vals = _all_values(f, cap)
        idx = np.arange(1 << n, dtype=np.int64)
        checked = 0
        for s in range(n):
            for t in range(s + 1, n):
                a = idx[((idx >> s) & 1 == 0) & ((idx >> t) & 1 == 0)]
                ls, lt = 1 << s, 1 << t
                lhs = vals[a | ls] - vals[a]
                rhs = vals[a | ls | lt] - vals[a | lt]
                checked += a.size
                bad = np.flatnonzero(lhs - rhs < -f.tol)
                if bad.size:
                    i = int(a[bad[0]])
                    cex = {"A": _ids(i), "B": _ids(i | lt), "s": s,
                           "gain_A": _val(f, lhs[bad[0]]), "gain_B": _val(f, rhs[bad[0]])}
                    return CheckResult("submodular", False, mode, checked, cex)
        return CheckResult("submodular", True, mode, checked)
    if mode == "sampled":
        if n == 0:
            return CheckResult("submodular", True, mode, 0)
        in_a, in_b, s = _sample_triples(n, n_samples, seed)
        rows_idx = np.arange(n_samples)
        in_as = in_a.copy()
        in_as[rows_idx, s] = True
        in_bs = in_b.copy()
        in_bs[rows_idx, s] = True
        stacked = np.concatenate([in_a, in_as, in_b, in_bs])
        v = f.raw_values(_bool_rows(stacked)).reshape(4, n_samples)
        lhs = v[1] - v[0]
        rhs = v[3] - v[2]
        bad = np.flatnonzero(lhs - rhs < -f.tol)
        if bad.size:
            i = bad[0]
            cex = {"A": np.flatnonzero(in_a[i]).tolist(), "B": np.flatnonzero(in_b[i]).tolist(),
                   "s": int(s[i]), "gain_A": _val(f, lhs[i]), "gain_B": _val(f, rhs[i])}
            return CheckResult("submodular", False, mode, n_samples, cex)
        return CheckResult("submodular", True, mode, n_samples)
    raise ValueError(f"unknown mode {mode!r}")


def check_all(f: SetFunction, mode: str = "exhaustive", **kwargs) -> list:
    return [check_normalized(f), check_monotone(f, mode, **kwargs), check_submodular(f, mode, **kwargs)]
