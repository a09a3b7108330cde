"""Sequential selection with message passing.

Agents act in list order. Agent ``i`` sees its own elements, the selections
of earlier agents and the messages earlier agents forwarded; it returns a
selection of at most ``k`` elements drawn from its own elements plus the
received messages, and a message of at most ``m`` of its own elements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .setcore import EvalBudget, SetFunction, argmax_subset, default_budget, marginal, sorted_ids

NOMINAL = "nominal"
INDEPENDENT = "independent"
AUGMENTED = "augmented"
POLICY_KINDS = (NOMINAL, INDEPENDENT, AUGMENTED)


@dataclass
class ProblemInstance:
    f: SetFunction
    agent_elements: list
    k: int
    m: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.agent_elements = [frozenset(int(e) for e in s) for s in self.agent_elements]
        if not self.agent_elements:
            raise ValueError("need at least one agent")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        for s in self.agent_elements:
            self.f.check_ids(s)

    @property
    def n(self) -> int:
        return len(self.agent_elements)

    def with_m(self, m: int) -> "ProblemInstance":
        return ProblemInstance(self.f, self.agent_elements, self.k, m, dict(self.meta))


@dataclass(frozen=True)
class PolicySpec:
    kind: str = AUGMENTED
    tie_break: str = "lexicographic"
    surplus_rule: str = "greedy"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.tie_break != "lexicographic":
            raise ValueError("only lexicographic tie-breaking is supported")
        if self.surplus_rule != "greedy":
            raise ValueError("only the greedy surplus rule is supported")


@dataclass
class AgentStep:
    x: frozenset
    z: frozenset
    marginal: object


@dataclass
class RunTrace:
    policy: str
    steps: list
    f_total: object

    @property
    def selections(self) -> list:
        return [s.x for s in self.steps]

    @property
    def messages(self) -> list:
        return [s.z for s in self.steps]

    def union(self) -> frozenset:
        return frozenset().union(*self.selections)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "agents": [{"x": sorted(s.x), "z": sorted(s.z), "marginal": _json_value(s.marginal)}
                       for s in self.steps],
            "f_total": _json_value(self.f_total),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _json_value(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if hasattr(v, "item"):
        return v.item()
    return v


def _union(sets: Sequence[frozenset]) -> frozenset:
    return frozenset().union(*sets) if sets else frozenset()


def nominal_select(i: int, instance: ProblemInstance, prior_x: Sequence[frozenset],
                   budget: EvalBudget | None = None) -> frozenset:
    """Best k-subset of agent ``i``'s own elements given the earlier selections.

    ``i`` is zero-based.
    """
    x, _ = argmax_subset(instance.f, instance.agent_elements[i], instance.k, _union(prior_x), budget)
    return x


def independent_select(i: int, instance: ProblemInstance, budget: EvalBudget | None = None) -> frozenset:
    x, _ = argmax_subset(instance.f, instance.agent_elements[i], instance.k, frozenset(), budget)
    return x


def augmented_step(i: int, instance: ProblemInstance, prior_x: Sequence[frozenset],
                   prior_z: Sequence[frozenset], budget: EvalBudget | None = None):
    """One augmented-greedy step: select from own elements plus received messages,
    then forward the best ``min(k, m)`` own elements given everything selected
    so far, topped up greedily to ``m`` when ``m > k``.

    Returns ``(x_i, z_i)``.
    """
    f, k, m = instance.f, instance.k, instance.m
    own = instance.agent_elements[i]
    before = _union(prior_x)
    x, _ = argmax_subset(f, own | _union(prior_z), k, before, budget)
    if m == 0:
        return x, frozenset()
    given = before | x
    z, _ = argmax_subset(f, own, min(k, m), given, budget)
    z = set(z)
    while len(z) < m:
        rest = sorted_ids(own - z)
        if not rest:
            break
        best, _ = argmax_subset(f, rest, 1, given | z, budget)
        z |= best
    return x, frozenset(z)


def run_policy(instance: ProblemInstance, spec: PolicySpec | str = AUGMENTED,
               budget: EvalBudget | None = None) -> RunTrace:
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    budget = budget or default_budget()
    f = instance.f
    xs, zs, steps = [], [], []
    for i in range(instance.n):
        if spec.kind == NOMINAL:
            x, z = nominal_select(i, instance, xs, budget), frozenset()
        elif spec.kind == INDEPENDENT:
            x, z = independent_select(i, instance, budget), frozenset()
        else:
            x, z = augmented_step(i, instance, xs, zs, budget)
        steps.append(AgentStep(x, z, marginal(f, x, _union(xs))))
        xs.append(x)
        zs.append(z)
    return RunTrace(spec.kind, steps, f.evaluate(_union(xs)))
