import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpgreedy.instances import example_instance, gen_random_coverage, gen_worst_case
from mpgreedy.objectives import CoverageFunction
from mpgreedy.policies import (AUGMENTED, INDEPENDENT, NOMINAL, PolicySpec, ProblemInstance, augmented_step,
                               independent_select, nominal_select, run_policy)
from mpgreedy.setcore import best_subset

from oracles import all_subsets


def value_fn(f):
    return lambda A: f.evaluate(A)


def oracle_argmax(value, items, k, base):
    """Best subset of size <= k by the documented order: value, then size, then lex."""
    b = value(set(base))
    best_key, best = None, None
    for X in all_subsets(items, k):
        key = (value(set(X) | set(base)) - b, len(X), tuple(-e for e in X))
        if best_key is None or key > best_key:
            best_key, best = key, frozenset(X)
    return best


def oracle_nominal(inst):
    xs = []
    for s in inst.agent_elements:
        xs.append(oracle_argmax(value_fn(inst.f), s, inst.k, set().union(*xs)))
    return xs


def oracle_augmented(inst):
    f, k, m = inst.f, inst.k, inst.m
    xs, zs = [], []
    for s in inst.agent_elements:
        before = set().union(*xs)
        x = oracle_argmax(value_fn(f), set(s) | set().union(*zs), k, before)
        z = set(oracle_argmax(value_fn(f), s, min(k, m), before | x)) if m else set()
        while len(z) < m and set(s) - z:
            z |= oracle_argmax(value_fn(f), set(s) - z, 1, before | x | z)
        xs.append(x)
        zs.append(frozenset(z))
    return xs, zs


def test_empty_agent_set():
    f = CoverageFunction.unit([[0]])
    inst = ProblemInstance(f, [[], [0]], k=2)
    assert nominal_select(0, inst, []) == frozenset()


def test_small_set_is_taken_whole():
    f = CoverageFunction.unit([[0], [0], [1]])
    inst = ProblemInstance(f, [[0, 1, 2]], k=3)
    assert nominal_select(0, inst, []) == {0, 1, 2}


def test_single_agent_equals_best_subset():
    inst = gen_random_coverage(1, 6, 10, (1, 3), k=2, seed=5)
    x, _ = best_subset(inst.f, inst.agent_elements[0], 2)
    for kind in (NOMINAL, INDEPENDENT, AUGMENTED):
        assert run_policy(inst.with_m(1), kind).selections[0] == x


@pytest.mark.parametrize("seed", range(40))
def test_nominal_matches_oracle(seed):
    inst = gen_random_coverage(3, 5, 10, (1, 3), k=2, seed=seed)
    assert run_policy(inst, NOMINAL).selections == oracle_nominal(inst)


@pytest.mark.parametrize("seed,m", list(itertools.product(range(25), (1, 2, 3))))
def test_augmented_matches_oracle(seed, m):
    inst = gen_random_coverage(3, 5, 10, (1, 3), k=2, m=m, seed=seed)
    trace = run_policy(inst, AUGMENTED)
    xs, zs = oracle_augmented(inst)
    assert trace.selections == xs
    assert trace.messages == zs


@pytest.mark.parametrize("seed", range(20))
def test_m_zero_is_nominal(seed):
    inst = gen_random_coverage(4, 6, 12, (1, 3), k=2, m=0, seed=seed)
    assert run_policy(inst, AUGMENTED).to_dict()["agents"] == run_policy(inst, NOMINAL).to_dict()["agents"]


def test_large_message_budget_sends_everything():
    inst = gen_random_coverage(3, 4, 10, k=1, m=10, seed=2)
    trace = run_policy(inst, AUGMENTED)
    for step, own in zip(trace.steps, inst.agent_elements):
        assert step.z == own


def test_identical_agents_pick_same_independent_set():
    f = CoverageFunction.unit([[0], [1, 2], [2, 3]])
    inst = ProblemInstance(f, [[0, 1, 2]] * 3, k=1)
    picks = [independent_select(i, inst) for i in range(3)]
    assert picks[0] == picks[1] == picks[2] == {1}


def test_worst_case_b_value():
    inst, _ = gen_worst_case("B", 3, 2, 2)
    assert run_policy(inst, AUGMENTED).f_total == 6


def test_worst_case_a_first_agent_follows_trap():
    inst, _ = gen_worst_case("A", 3, 5, 2)
    roles = inst.meta["roles"]
    x, z = augmented_step(0, inst, [], [])
    assert x == set(roles["blue"][0])
    assert z == set(roles["orange"][0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 3), st.integers(1, 3))
def test_trace_prefix_values_non_decreasing_and_feasible(seed, m, k):
    inst = gen_random_coverage(4, 5, 10, (1, 3), k=k, m=m, seed=seed)
    trace = run_policy(inst, AUGMENTED)
    received, prev = frozenset(), 0
    chosen = frozenset()
    for step, own in zip(trace.steps, inst.agent_elements):
        assert len(step.x) <= k and len(step.z) <= m
        assert step.z <= own and step.x <= own | received
        chosen |= step.x
        now = inst.f(chosen)
        assert now >= prev
        assert now - prev == step.marginal
        prev = now
        received |= step.z
    assert trace.f_total == prev


def test_trace_json_shape():
    trace = run_policy(example_instance(), AUGMENTED)
    d = trace.to_dict()
    assert d["policy"] == AUGMENTED
    assert set(d["agents"][0]) == {"x", "z", "marginal"}
    assert trace.to_json() == run_policy(example_instance(), AUGMENTED).to_json()


def test_example_instance_quoted_values():
    inst = example_instance()
    assert inst.f({5, 7}) == 2
    assert inst.f({4, 5, 7}) == 3
    assert (inst.n, inst.k, inst.m) == (3, 2, 1)


def test_invalid_policy_and_instance():
    with pytest.raises(ValueError):
        PolicySpec("random")
    f = CoverageFunction.unit([[0]])
    with pytest.raises(ValueError):
        ProblemInstance(f, [[0]], k=0)
    with pytest.raises(ValueError):
        ProblemInstance(f, [[0]], k=1, m=-1)
    with pytest.raises(ValueError):
        ProblemInstance(f, [[3]], k=1)
