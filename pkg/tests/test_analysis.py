import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpgreedy.analysis import (augmented_alpha, bound_report, brute_force_opt, check_lemma1, estimate_gamma_pi,
                               lemma1_threshold, ratio, thm1_lower, thm1_upper, thm2_bounds)
from mpgreedy.errors import BudgetExceeded, InvalidSpec
from mpgreedy.instances import gen_random_coverage, gen_worst_case
from mpgreedy.objectives import CoverageFunction
from mpgreedy.policies import AUGMENTED, NOMINAL, ProblemInstance, run_policy
from mpgreedy.setcore import EvalBudget, best_subset

from oracles import opt_value


def float_thm1_upper(n, k, m):
    t = min((n - 1) * m / k, 1.0)
    return 1.0 / (2.0 - t / (n - 1 + t))


def float_thm1_lower(n, k, m):
    r = min(m / k, 1.0)
    s = sum(r**i if i else 1.0 for i in range(n))
    top = r ** (n - 1) if n > 1 else 1.0
    return 1.0 / (2.0 - top / s)


@pytest.mark.parametrize("seed", range(40))
def test_opt_matches_independent_enumeration(seed):
    inst = gen_random_coverage(3, 5, 10, (1, 3), k=2, seed=seed)
    assert brute_force_opt(inst).value == opt_value(inst.f.evaluate, inst.agent_elements, 2)


@pytest.mark.parametrize("seed", range(20))
def test_branch_and_bound_agrees_with_enumeration(seed):
    inst = gen_random_coverage(4, 6, 12, (1, 3), k=2, seed=seed)
    full = brute_force_opt(inst)
    bb = brute_force_opt(inst, full_limit=0)
    assert (bb.value, bb.profile) == (full.value, full.profile)
    assert bb.method != full.method


def test_opt_single_agent():
    inst = gen_random_coverage(1, 6, 10, (1, 3), k=2, seed=3)
    assert brute_force_opt(inst).value == best_subset(inst.f, inst.agent_elements[0], 2)[1]


def test_opt_worst_case_a():
    inst, _ = gen_worst_case("A", 2, 2, 1)
    assert brute_force_opt(inst).value == 5


def test_opt_disjoint_is_additive():
    f = CoverageFunction.unit([[i] for i in range(9)])
    sets = [[0, 1, 2, 3], [4], [5, 6, 7, 8]]
    inst = ProblemInstance(f, sets, k=2)
    assert brute_force_opt(inst).value == sum(min(len(s), 2) for s in sets)


def test_opt_budget():
    inst = gen_random_coverage(4, 6, 12, k=2, seed=1)
    with pytest.raises(BudgetExceeded):
        brute_force_opt(inst, EvalBudget(max_subsets_enumerated=5))


def test_upper_examples():
    assert thm1_upper(2, 1, 1) == Fraction(2, 3)
    assert thm1_upper(3, 2, 2) == Fraction(3, 5)
    for n, k in itertools.product(range(2, 6), range(1, 5)):
        assert thm1_upper(n, k, 0) == Fraction(1, 2)


def test_lower_examples():
    assert thm1_lower(2, 1, 1) == Fraction(2, 3)
    for n, k in itertools.product(range(2, 8), range(1, 6)):
        assert thm1_lower(n, k, 0) == Fraction(1, 2)
        for m in range(k, k + 3):
            assert thm1_lower(n, k, m) == Fraction(n, 2 * n - 1)


def test_thm2_examples():
    assert thm2_bounds(3, 2, 2)[1] == 3
    assert thm2_bounds(4, 3, 0) == (Fraction(1, 2), 2)
    assert thm2_bounds(3, 1, 100)[1] == 3 + 1  # saturates at n + 1


def test_bounds_reject_bad_parameters():
    for args in [(1, 1, 1), (2, 0, 1), (2, 1, -1)]:
        with pytest.raises(InvalidSpec):
            thm1_upper(*args)
        with pytest.raises(InvalidSpec):
            thm1_lower(*args)


@settings(max_examples=300)
@given(st.integers(2, 10), st.integers(1, 10), st.integers(0, 10))
def test_bound_properties(n, k, m):
    lo, hi = thm1_lower(n, k, m), thm1_upper(n, k, m)
    assert isinstance(lo, Fraction) and isinstance(hi, Fraction)
    assert float(lo) == pytest.approx(float_thm1_lower(n, k, m), abs=1e-12)
    assert float(hi) == pytest.approx(float_thm1_upper(n, k, m), abs=1e-12)
    assert Fraction(1, 2) <= lo <= hi <= Fraction(2, 3)
    if n == 2:
        assert lo == hi
    if m >= k:
        assert lo == hi == thm1_upper(n, k, k)


def test_lemma_threshold_and_alpha():
    assert lemma1_threshold(2, 1) == Fraction(2, 3)
    assert augmented_alpha(2, 1) == 2
    assert augmented_alpha(2, 5) == 1
    for n, k, m in itertools.product(range(2, 6), range(1, 5), range(1, 5)):
        assert lemma1_threshold(n, augmented_alpha(k, m)) == thm1_lower(n, k, m)
    with pytest.raises(InvalidSpec):
        augmented_alpha(2, 0)


@pytest.mark.parametrize("seed,m", [(s, m) for s in range(30) for m in (1, 2)])
def test_lemma_premise_holds_for_augmented(seed, m):
    inst = gen_random_coverage(4, 6, 12, (1, 3), k=2, m=m, seed=seed)
    trace = run_policy(inst, AUGMENTED)
    rep = check_lemma1(inst, trace, brute_force_opt(inst), augmented_alpha(2, m))
    assert rep.premise_holds and rep.conclusion_holds
    assert rep.min_premise_slack >= -1e-9


def test_lemma_flags_failing_premise():
    # the nominal trace sends nothing, so alpha * 0 cannot cover a positive optimal gain
    f = CoverageFunction.unit([[0], [1], [0]])
    inst = ProblemInstance(f, [[0, 1], [2]], k=1, m=1)
    trace = run_policy(inst, NOMINAL)
    rep = check_lemma1(inst, trace, brute_force_opt(inst), 1)
    assert not rep.premise_holds
    assert rep.conclusion_holds is None
    assert not rep.steps[0].holds


def test_ratio_helper():
    assert ratio(3, 4) == Fraction(3, 4)
    assert ratio(0, 0) == 1
    assert ratio(1, 0) == math.inf
    assert isinstance(ratio(1.0, 2.0), float)


def test_bound_report_dict():
    d = bound_report(3, 2, 2, ratio_ag_ng=1.2).to_dict()
    assert d["thm1_upper"] == pytest.approx(0.6)
    assert d["thm2_upper"] == 3


def test_gamma_estimate_nominal_full_visibility():
    f = CoverageFunction.unit([[0, 1], [1, 2], [2, 3], [3, 4], [0]])
    ground = range(5)
    est, running = estimate_gamma_pi(f, ground, 3, 1, 0, NOMINAL, n_partitions=0,
                                     extra_partitions=[[ground] * 3])
    assert est >= Fraction(1, 2)


def test_gamma_estimate_with_adversarial_partition():
    inst, exp = gen_worst_case("A", 2, 2, 1)
    ground = range(inst.f.ground_size)
    est, running = estimate_gamma_pi(inst.f, ground, 2, 2, 1, AUGMENTED, n_partitions=30, seed=2,
                                     extra_partitions=[inst.agent_elements])
    assert est <= exp
    assert all(a >= b for a, b in zip(running, running[1:]))
