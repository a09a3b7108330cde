"""Optimal values, closed-form guarantees and trace checkers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from .errors import InvalidSpec
from .policies import AUGMENTED, PolicySpec, ProblemInstance, RunTrace, _json_value, run_policy
from .setcore import EvalBudget, best_subset, default_budget, marginal, subset_pattern, map_pattern, sorted_ids

FULL_ENUMERATION_LIMIT = 1_000_000
CHUNK_ROWS = 65_536


@dataclass
class OptResult:
    value: object
    profile: list
    enumerated_count: int
    method: str = "enumeration"

    def to_dict(self) -> dict:
        return {"value": _json_value(self.value), "profile": [sorted(x) for x in self.profile],
                "enumerated_count": self.enumerated_count, "method": self.method}


def _agent_choices(instance: ProblemInstance) -> list:
    """Per agent, the candidate selections of size ``min(k, |S_i|)`` in lex order.

    A monotone objective always has an optimal profile among these.
    """
    out = []
    for s in instance.agent_elements:
        size = min(instance.k, len(s))
        if size == 0:
            out.append(np.zeros((1, 0), dtype=np.int64))
            continue
        pattern, _ = subset_pattern(len(s), size, size)
        out.append(map_pattern(s, pattern))
    return out


def _profile(choices, idx) -> list:
    return [frozenset(int(e) for e in choices[i][j] if e >= 0) for i, j in enumerate(idx)]


def _enumerate_opt(f, choices, count):
    shape = tuple(len(c) for c in choices)
    best_val, best_flat = None, None
    tol = f.tol
    empty = frozenset()
    for start in range(0, count, CHUNK_ROWS):
        flat = np.arange(start, min(start + CHUNK_ROWS, count), dtype=np.int64)
        idx = np.unravel_index(flat, shape)
        rows = np.hstack([choices[i][idx[i]] for i in range(len(choices))])
        if rows.shape[1] == 0:
            rows = np.full((len(flat), 1), -1, dtype=np.int64)
        vals = f.raw_gains(empty, rows)
        j = int(np.argmax(vals))
        if best_val is None or vals[j] > best_val + tol:
            hit = np.flatnonzero(vals >= vals[j] - tol)[0] if tol else j
            best_val, best_flat = vals[hit], int(flat[hit])
    idx = np.unravel_index(best_flat, shape)
    return best_val, [int(i) for i in idx]


class _Search:
    """Depth-first branch and bound over agent-major profiles.

    The bound for a partial profile ``x_1..x_i`` is ``f(x_1..x_i | S_{i+1..n})``,
    valid for monotone ``f``.
    """

    def __init__(self, f, choices, agent_elements, budget: EvalBudget):
        self.f = f
        self.choices = choices
        self.budget = budget
        self.count = 0
        n = len(choices)
        self.rest = [frozenset().union(*agent_elements[i + 1:]) for i in range(n)]
        self.rest_raw = [f.raw_gains(frozenset(), _row(r))[0] for r in self.rest]

    def _spend(self, n_rows: int):
        self.count += n_rows
        self.budget.require(self.count, "optimal-profile search")

    def _child_rows(self, prefix, i):
        cand = self.choices[i]
        if prefix.size:
            return np.hstack([np.broadcast_to(prefix, (len(cand), prefix.size)), cand])
        return cand if cand.shape[1] else np.full((len(cand), 1), -1, dtype=np.int64)

    def bounds(self, prefix, i):
        rows = self._child_rows(prefix, i)
        self._spend(len(rows))
        if i == len(self.choices) - 1:
            return rows, self.f.raw_gains(frozenset(), rows)
        return rows, self.rest_raw[i] + self.f.raw_gains(self.rest[i], rows)

    def best_first(self, global_ub):
        tol = self.f.tol
        best = [None]
        n = len(self.choices)

        def visit(prefix, i):
            rows, ub = self.bounds(prefix, i)
            order = np.argsort(-ub, kind="stable")
            for j in order:
                if best[0] is not None and ub[j] <= best[0] + tol:
                    return False
                if i == n - 1:
                    best[0] = ub[j]
                    return best[0] >= global_ub - tol
                if visit(rows[j], i + 1):
                    return True
            return False

        visit(np.zeros(0, dtype=np.int64), 0)
        return best[0]

    def first_reaching(self, target):
        tol = self.f.tol
        n = len(self.choices)

        def visit(prefix, i):
            rows, ub = self.bounds(prefix, i)
            for j in np.flatnonzero(ub >= target - tol):
                if i == n - 1:
                    return [int(j)]
                found = visit(rows[j], i + 1)
                if found is not None:
                    return [int(j)] + found
            return None

        return visit(np.zeros(0, dtype=np.int64), 0)


def _row(s) -> np.ndarray:
    ids = sorted_ids(s)
    return np.array([ids or [-1]], dtype=np.int64)


def brute_force_opt(instance: ProblemInstance, budget: EvalBudget | None = None,
                    full_limit: int = FULL_ENUMERATION_LIMIT) -> OptResult:
    """Exact optimum over all profiles with ``|x_i| <= k`` and ``x_i`` within ``S_i``.

    Small product spaces are enumerated outright; larger ones are searched
    with branch and bound. Either way the returned profile is the first
    optimal one in agent-major lexicographic order.
    """
    budget = budget or default_budget()
    f = instance.f
    choices = _agent_choices(instance)
    count = prod(len(c) for c in choices)
    if count <= full_limit:
        budget.require(count, "optimal-profile enumeration")
        raw, idx = _enumerate_opt(f, choices, count)
        profile = _profile(choices, idx)
        return OptResult(f.evaluate(frozenset().union(*profile)), profile, count, "enumeration")
    search = _Search(f, choices, instance.agent_elements, budget)
    everything = frozenset().union(*instance.agent_elements)
    global_ub = f.raw_gains(frozenset(), _row(everything))[0]
    raw = search.best_first(global_ub)
    idx = search.first_reaching(raw)
    profile = _profile(choices, idx)
    return OptResult(f.evaluate(frozenset().union(*profile)), profile, search.count, "branch_and_bound")


def _check_nkm(n, k, m, min_n=2):
    if n < min_n or k < 1 or m < 0:
        raise InvalidSpec(f"need n >= {min_n}, k >= 1, m >= 0; got n={n}, k={k}, m={m}")


def thm1_upper(n: int, k: int, m: int) -> Fraction:
    """Best ratio any message-passing policy can guarantee (worst case over instances)."""
    _check_nkm(n, k, m)
    t = min(Fraction((n - 1) * m, k), Fraction(1))
    return 1 / (2 - t / (n - 1 + t))


def thm1_lower(n: int, k: int, m: int) -> Fraction:
    """Guaranteed ratio of any augmented greedy policy; ``0**0`` is taken as 1."""
    _check_nkm(n, k, m)
    r = min(Fraction(m, k), Fraction(1))
    powers = [r**i if i else Fraction(1) for i in range(n)]
    return 1 / (2 - powers[n - 1] / sum(powers))


def thm2_bounds(n: int, k: int, m: int):
    """``(lower, upper)`` on augmented-over-nominal value for any instance."""
    _check_nkm(n, k, m)
    return thm1_lower(n, k, m), 2 + min(Fraction(m, k), Fraction(n - 1))


def lemma1_threshold(n: int, alpha) -> Fraction | float:
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    return 1 / (2 - 1 / sum(alpha**i for i in range(n)))


def augmented_alpha(k: int, m: int) -> Fraction:
    if m < 1:
        raise InvalidSpec("alpha needs m >= 1")
    return 1 / min(Fraction(m, k), Fraction(1))


def ratio(num, den):
    """Exact ratio for exact values, float otherwise; ``0/0`` counts as 1."""
    if den == 0:
        if num == 0:
            return Fraction(1) if isinstance(num, (int, Fraction)) else 1.0
        return float("inf")
    if isinstance(num, (int, Fraction)) and isinstance(den, (int, Fraction)):
        return Fraction(num) / Fraction(den)
    return float(num) / float(den)


@dataclass
class BoundReport:
    n: int
    k: int
    m: int
    thm1_upper: Fraction
    thm1_lower: Fraction
    thm2_lower: Fraction
    thm2_upper: Fraction
    alpha: Fraction | None
    observed: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"n": self.n, "k": self.k, "m": self.m}
        for name in ("thm1_upper", "thm1_lower", "thm2_lower", "thm2_upper", "alpha"):
            v = getattr(self, name)
            d[name] = None if v is None else float(v)
            d[name + "_exact"] = None if v is None else str(v)
        d["observed"] = {key: (str(v) if isinstance(v, Fraction) else v) for key, v in self.observed.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bound_report(n: int, k: int, m: int, **observed) -> BoundReport:
    lo, hi = thm2_bounds(n, k, m)
    alpha = augmented_alpha(k, m) if m >= 1 else None
    return BoundReport(n, k, m, thm1_upper(n, k, m), thm1_lower(n, k, m), lo, hi, alpha, observed)


@dataclass
class LemmaStep:
    agent: int
    lhs: float
    rhs: float
    slack: float
    holds: bool


@dataclass
class LemmaCheckReport:
    alpha: float
    steps: list
    premise_holds: bool
    ratio: float
    threshold: float
    conclusion_slack: float
    conclusion_holds: bool | None  # None when the premise fails and nothing is asserted

    @property
    def min_premise_slack(self) -> float:
        return min((s.slack for s in self.steps), default=float("inf"))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["min_premise_slack"] = self.min_premise_slack
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def check_lemma1(instance: ProblemInstance, trace: RunTrace, opt: OptResult, alpha,
                 budget: EvalBudget | None = None, tol: float = 1e-9) -> LemmaCheckReport:
    """Check the per-step message premise and, if it holds, the ratio conclusion.

    For agents ``i < n`` the premise is
    ``alpha * best_k(z_i | x_1..x_i) >= gain(x_i^opt | x_1..x_i)``; the
    conclusion is ``f(x) / OPT >= 1 / (2 - 1 / sum_{j<n} alpha^j)``.
    """
    if alpha < 1:
        raise InvalidSpec("alpha must be >= 1")
    f, k, n = instance.f, instance.k, instance.n
    steps = []
    so_far = frozenset()
    for i in range(n - 1):
        so_far = so_far | trace.steps[i].x
        _, best_z = best_subset(f, trace.steps[i].z, k, so_far, budget)
        lhs = float(alpha * best_z) if not isinstance(alpha, float) else alpha * float(best_z)
        rhs = float(marginal(f, opt.profile[i], so_far))
        slack = lhs - rhs
        steps.append(LemmaStep(i, lhs, rhs, slack, slack >= -tol))
    premise = all(s.holds for s in steps)
    thr = lemma1_threshold(n, alpha)
    r = ratio(trace.f_total, opt.value)
    c_slack = float(r) - float(thr)
    holds = (c_slack >= -tol) if premise else None
    return LemmaCheckReport(float(alpha), steps, premise, float(r), float(thr), c_slack, holds)


def random_partition(ground, n: int, rng: np.random.Generator) -> list:
    """Each element joins each agent's set independently with probability 1/2."""
    ground = sorted_ids(ground)
    member = rng.random((n, len(ground))) < 0.5
    return [frozenset(g for g, keep in zip(ground, row) if keep) for row in member]


def estimate_gamma_pi(f, ground, n: int, k: int, m: int, spec: PolicySpec | str = AUGMENTED,
                      n_partitions: int = 100, seed: int = 0, extra_partitions=(),
                      budget: EvalBudget | None = None):
    """Smallest observed ``f(x_pi) / OPT`` over sampled agent element sets.

    Sampling cannot certify the minimum, so the result is an upper bound on
    the true worst case. Returns ``(estimate, running_min)``; ``extra_partitions``
    are evaluated first.
    """
    rng = np.random.default_rng(seed)
    partitions = [list(p) for p in extra_partitions]
    partitions += [random_partition(ground, n, rng) for _ in range(n_partitions)]
    best = None
    running = []
    for sets in partitions:
        inst = ProblemInstance(f, sets, k, m)
        opt = brute_force_opt(inst, budget)
        trace = run_policy(inst, spec, budget)
        r = ratio(trace.f_total, opt.value)
        best = r if best is None or r < best else best
        running.append(best)
    return best, running
