"""Property suites behind ``mpgreedy check``."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .analysis import brute_force_opt, thm1_lower, thm1_upper, thm2_bounds
from .errors import InvalidSpec
from .instances import CameraScenarioSpec, gen_camera_scenario, gen_random_coverage, gen_worst_case
from .objectives import CoverageFunction
from .policies import AUGMENTED, NOMINAL, run_policy
from .setcore import OracleFunction, best_subset, check_all, marginal


def random_coverage_function(n_elems: int, n_cells: int = 10, seed: int = 0) -> CoverageFunction:
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, 5, size=n_cells)
    cells = []
    for _ in range(n_elems):
        c = np.flatnonzero(rng.random(n_cells) < 0.3)
        cells.append(c.tolist() if c.size else [int(rng.integers(n_cells))])
    return CoverageFunction([(i, int(w)) for i, w in enumerate(weights)], cells)


def supermodular_double(ground_size: int = 3) -> OracleFunction:
    """``f(A) = |A|^2``: normalized and monotone but not submodular."""
    return OracleFunction(ground_size, lambda A: len(A) ** 2, exact=True)


def _item(suite, name, passed, detail=None):
    return {"suite": suite, "name": name, "passed": bool(passed), "detail": detail}


def objective_checks(cap: int, n_samples: int, inject_supermodular: bool = False) -> list:
    out = []
    n_vehicles = 3
    camera_small, _ = gen_camera_scenario(CameraScenarioSpec(images_per_vehicle=max(1, cap // n_vehicles), seed=1))
    camera_full, _ = gen_camera_scenario(CameraScenarioSpec(seed=2))
    boxes = CoverageFunction.from_intervals([(i, i + int(w)) for i, w in zip(range(cap), [1, 3, 2, 1, 4] * cap)])
    subjects = [
        ("coverage", random_coverage_function(cap, seed=3), "exhaustive"),
        ("interval_coverage", boxes, "exhaustive"),
        ("camera_logdet", camera_small.f, "exhaustive"),
        ("coverage", random_coverage_function(40, 25, seed=4), "sampled"),
        ("camera_logdet", camera_full.f, "sampled"),
    ]
    if inject_supermodular:
        subjects.append(("injected_supermodular", supermodular_double(), "exhaustive"))
    for name, f, mode in subjects:
        kw = {"cap": cap} if mode == "exhaustive" else {"n_samples": n_samples, "seed": 5}
        for res in check_all(f, mode, **kw):
            out.append(_item("objectives", f"{name}/{res.property}/{mode}", res.passed, res.to_dict()))
    planted = check_all(supermodular_double(), "exhaustive")
    rejected = planted[2].passed is False and planted[2].counterexample is not None
    out.append(_item("objectives", "planted_supermodular_rejected", rejected, planted[2].to_dict()))
    return out


def setcore_checks(n_instances: int = 20) -> list:
    bad = []
    for seed in range(n_instances):
        f = random_coverage_function(7, seed=100 + seed)
        rng = np.random.default_rng(seed)
        A = frozenset(np.flatnonzero(rng.random(7) < 0.6).tolist()) or frozenset([0])
        B = frozenset(np.flatnonzero(rng.random(7) < 0.3).tolist())
        B2 = B | frozenset(np.flatnonzero(rng.random(7) < 0.3).tolist())
        full = marginal(f, A, B)
        prev = None
        for l in range(len(A) + 1):
            x, v = best_subset(f, A, l, B)
            if v < min(Fraction(l, len(A)), 1) * full:
                bad.append(("density", seed, l))
            if prev is not None and v < prev:
                bad.append(("nesting", seed, l))
            if best_subset(f, A, l, B) != (x, v):
                bad.append(("determinism", seed, l))
            prev = v
        if marginal(f, A, B) < marginal(f, A, B2):
            bad.append(("marginal_nonincreasing", seed))
    return [_item("set_core", "density_nesting_determinism", not bad, bad[:5] or None)]


def worst_case_checks() -> list:
    failures = []
    count = 0
    for n, k, m, variant in itertools.product(range(2, 6), range(1, 7), range(0, 4), "AB"):
        try:
            inst, expected = gen_worst_case(variant, n, k, m)
        except InvalidSpec:
            continue
        count += 1
        trace = run_policy(inst, AUGMENTED)
        opt = brute_force_opt(inst)
        achieved = Fraction(trace.f_total, opt.value)
        if not achieved == expected == thm1_upper(n, k, m):
            failures.append({"variant": variant, "n": n, "k": k, "m": m, "achieved": str(achieved)})
        roles = inst.meta["roles"]
        last = inst.agent_elements[-1]
        if variant == "A":
            oranges = frozenset(e for row in roles["orange"] for e in row)
            if marginal(inst.f, oranges, last) != 0:
                failures.append({"variant": variant, "n": n, "k": k, "m": m, "claim": "orange_redundant"})
        else:
            prefix = frozenset().union(*trace.selections[:-1])
            for x_n in itertools.combinations(sorted(last), k):
                if inst.f(prefix | set(x_n)) != k * n:
                    failures.append({"variant": variant, "n": n, "k": k, "m": m, "claim": "any_x_n"})
    return [_item("worst_case", "exact_ratios_and_structure", not failures,
                  {"instances": count, "failures": failures[:5]})]


def bound_checks(limit: int = 10) -> list:
    bad = []
    for n, k, m in itertools.product(range(2, limit + 1), range(1, limit + 1), range(0, limit + 1)):
        lo, hi = thm1_lower(n, k, m), thm1_upper(n, k, m)
        if lo > hi:
            bad.append(("order", n, k, m))
        if n == 2 and lo != hi:
            bad.append(("n2_equal", n, k, m))
        if m >= k and (lo != hi or hi != thm1_upper(n, k, k)):
            bad.append(("saturation", n, k, m))
        l2, h2 = thm2_bounds(n, k, m)
        if not l2 <= 1 <= h2:
            bad.append(("thm2_contains_one", n, k, m))
    return [_item("bounds", "ordering_equalities_saturation", not bad, bad[:5] or None)]


def policy_checks(n_instances: int = 30) -> list:
    bad = []
    for seed in range(n_instances):
        base = gen_random_coverage(3, 5, 10, (1, 3), k=2, m=0, seed=seed)
        ng = run_policy(base, NOMINAL)
        ag0 = run_policy(base, AUGMENTED)
        if ng.to_dict()["agents"] != ag0.to_dict()["agents"]:
            bad.append(("m0_equivalence", seed))
        for m in (1, 2, 3):
            inst = base.with_m(m)
            tr = run_policy(inst, AUGMENTED)
            received = frozenset()
            for i, step in enumerate(tr.steps):
                own = inst.agent_elements[i]
                if len(step.x) > inst.k or len(step.z) > m or not step.z <= own or not step.x <= own | received:
                    bad.append(("feasibility", seed, m, i))
                received |= step.z
            if sum(s.marginal for s in tr.steps) != tr.f_total:
                bad.append(("marginals_sum", seed, m))
    return [_item("policies", "feasibility_and_m0_equivalence", not bad, bad[:5] or None)]


def run_checks(cap: int = 14, n_samples: int = 10_000, inject_supermodular: bool = False) -> dict:
    results = (objective_checks(cap, n_samples, inject_supermodular) + setcore_checks()
               + worst_case_checks() + bound_checks() + policy_checks())
    failures = [r for r in results if not r["passed"]]
    return {"passed": not failures, "config": {"exhaustive_cap": cap, "samples": n_samples,
                                               "inject_supermodular": inject_supermodular},
            "n_checks": len(results), "failures": failures, "results": results}
