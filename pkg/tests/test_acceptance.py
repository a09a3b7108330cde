"""Acceptance criteria, one test per criterion.

Each test records a single ``[criterion N] PASS|FAIL ...`` line; the lines are
printed together in the "acceptance criteria" section of the pytest summary.
Run the file directly (``python3 tests/test_acceptance.py``) for a short report.
"""

import itertools
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from mpgreedy.analysis import (augmented_alpha, brute_force_opt, check_lemma1, ratio, thm1_lower, thm1_upper,
                               thm2_bounds)
from mpgreedy.errors import InvalidSpec
from mpgreedy.harness import MonteCarloConfig, run_montecarlo, run_worstcase
from mpgreedy.instances import CameraScenarioSpec, gen_camera_scenario, gen_random_coverage
from mpgreedy.objectives import CoverageFunction
from mpgreedy.policies import AUGMENTED, NOMINAL, run_policy
from mpgreedy.setcore import OracleFunction, check_all, check_submodular

TOL = 1e-9
CORPUS_SIZE = 1200


RESULTS = {}  # printed by the terminal-summary hook in conftest.py


def report(number, passed, detail):
    RESULTS[number] = f"[criterion {number}] {'PASS' if passed else 'FAIL'} {detail}"
    print(RESULTS[number])
    return passed


def corpus():
    """Seeded random coverage instances with n <= 4, |S_i| <= 6, k <= 2."""
    out = []
    for seed in range(CORPUS_SIZE):
        n = 2 + seed % 3
        k = 1 + (seed // 3) % 2
        out.append(gen_random_coverage(n, 6, 12, (1, 3), k=k, m=0, seed=seed, overlap=0.25))
    return out


@pytest.fixture(scope="module")
def solved_corpus():
    rows = []
    start = time.perf_counter()
    for inst in corpus():
        opt = brute_force_opt(inst)
        ng = run_policy(inst, NOMINAL)
        rows.append({"inst": inst, "opt": opt, "ng": ng})
    return rows, time.perf_counter() - start


def test_criterion_1_worst_case_exactness():
    start = time.perf_counter()
    bad, count = [], 0
    for variant, n, k, m in itertools.product("AB", range(2, 6), range(1, 7), range(0, 4)):
        try:
            r = run_worstcase(variant, n, k, m)
        except InvalidSpec:
            continue
        count += 1
        achieved = Fraction(r["achieved_ratio"])
        if variant == "A":
            closed = Fraction(k * (n - 1) + m * (n - 1), 2 * k * (n - 1) + m * (n - 1))
        else:
            closed = Fraction(n, 2 * n - 1)
        if not (achieved == closed == Fraction(r["expected_ratio"]) and r["exact_match"]):
            bad.append((variant, n, k, m, str(achieved)))
    elapsed = time.perf_counter() - start
    ok = not bad and count > 0 and elapsed < 10
    assert report(1, ok, f"{count} specs exact, {len(bad)} mismatches, {elapsed:.2f}s (< 10s)"), bad[:5]


def test_criterion_2_point_values():
    checks = []
    for k in range(1, 8):
        checks.append(abs(float(thm1_upper(2, k, k)) - 2 / 3) <= 1e-12)
        checks.append(abs(float(thm1_lower(2, k, k)) - 2 / 3) <= 1e-12)
    for n, k in itertools.product(range(2, 8), range(1, 7)):
        for m in range(k, k + 5):
            checks.append(abs(float(thm1_upper(n, k, m)) - float(thm1_lower(n, k, m))) <= 1e-12)
            checks.append(abs(float(thm1_upper(n, k, m)) - float(thm1_upper(n, k, k))) <= 1e-12)
    checks.append(abs(float(thm2_bounds(3, 2, 2)[1]) - 3.0) <= 1e-12)
    ok = all(checks)
    assert report(2, ok, f"{sum(checks)}/{len(checks)} point checks within 1e-12")


def test_criterion_3_nominal_half(solved_corpus):
    rows, setup = solved_corpus
    start = time.perf_counter()
    bad = [i for i, r in enumerate(rows) if float(ratio(r["ng"].f_total, r["opt"].value)) < 0.5]
    elapsed = setup + time.perf_counter() - start
    worst = min(float(ratio(r["ng"].f_total, r["opt"].value)) for r in rows)
    ok = not bad and len(rows) >= 1000 and elapsed < 60
    assert report(3, ok, f"{len(rows)} instances, {len(bad)} violations, min ratio {worst:.4f}, "
                         f"{elapsed:.1f}s (< 60s)")


def augmented_runs(rows):
    for r in rows:
        inst = r["inst"]
        for m in sorted({0, 1, inst.k}):
            yield r, inst.with_m(m), run_policy(inst.with_m(m), AUGMENTED)


@pytest.fixture(scope="module")
def augmented_corpus(solved_corpus):
    return list(augmented_runs(solved_corpus[0]))


def test_criterion_4_thm1_lower(augmented_corpus):
    bad = []
    for r, inst, ag in augmented_corpus:
        if float(ratio(ag.f_total, r["opt"].value)) < float(thm1_lower(inst.n, inst.k, inst.m)) - TOL:
            bad.append(inst.meta["seed"])
    ok = not bad
    assert report(4, ok, f"{len(augmented_corpus)} runs (m in {{0, 1, k}}), {len(bad)} violations"), bad[:5]


def test_criterion_5_thm2_sandwich(augmented_corpus):
    bad, m0_diff, m0_count = [], [], 0
    for r, inst, ag in augmented_corpus:
        lo, hi = thm2_bounds(inst.n, inst.k, inst.m)
        q = float(ratio(ag.f_total, r["ng"].f_total))
        if not float(lo) - TOL <= q <= float(hi) + TOL:
            bad.append(inst.meta["seed"])
        if inst.m == 0:
            m0_count += 1
            if ag.to_dict()["agents"] != r["ng"].to_dict()["agents"]:
                m0_diff.append(inst.meta["seed"])
    ok = not bad and not m0_diff
    assert report(5, ok, f"{len(augmented_corpus)} runs, {len(bad)} sandwich violations, "
                         f"{len(m0_diff)}/{m0_count} m=0 trace mismatches")


def test_criterion_6_lemma_checker(augmented_corpus):
    bad, count = [], 0
    for r, inst, ag in augmented_corpus:
        if inst.m < 1:
            continue
        count += 1
        rep = check_lemma1(inst, ag, r["opt"], augmented_alpha(inst.k, inst.m))
        if not (rep.premise_holds and rep.conclusion_holds):
            bad.append(inst.meta["seed"])
    ok = not bad and count > 0
    assert report(6, ok, f"{count} augmented traces with m >= 1, {len(bad)} premise/conclusion failures")


def test_criterion_7_objective_validity():
    intervals = CoverageFunction.from_intervals([(i, i + 1 + (3 * i) % 4) for i in range(14)])
    camera_small, _ = gen_camera_scenario(CameraScenarioSpec(images_per_vehicle=4, seed=1))  # ground 12
    camera_full, _ = gen_camera_scenario(CameraScenarioSpec(seed=2))
    big_intervals = CoverageFunction.from_intervals([(i, i + 2 + i % 5) for i in range(40)])
    results = []
    for f in (intervals, camera_small.f):
        assert f.ground_size <= 14
        results += check_all(f, "exhaustive", cap=14)
    for f in (big_intervals, camera_full.f, intervals):
        results += check_all(f, "sampled", n_samples=10_000, seed=3)
    planted = check_submodular(OracleFunction(3, lambda A: len(A) ** 2, exact=True))
    rejected = not planted.passed and planted.counterexample is not None
    ok = all(results) and rejected
    assert report(7, ok, f"{sum(map(bool, results))}/{len(results)} property checks pass, "
                         f"planted supermodular rejected={rejected}")


def test_criterion_8_monte_carlo():
    start = time.perf_counter()
    rows, summary, _ = run_montecarlo(MonteCarloConfig(trials=10_000, seed=0))
    elapsed = time.perf_counter() - start
    lo = summary["thm2_lower"]
    inside = sum(1 for r in rows if lo - TOL <= r["ratio"] <= 3.0 + TOL)
    h = summary["histogram"]
    ok = len(rows) == 10_000 and inside == len(rows) and elapsed < 600
    assert report(8, ok, f"{inside}/{len(rows)} ratios in [{lo:.4f}, 3], {elapsed:.1f}s (< 600s); "
                         f"equal_one={h['fraction_equal_one']:.4f} above_one={h['fraction_above_one']:.4f} "
                         f"below_one={h['fraction_below_one']:.4f}")


def _cli(args):
    return subprocess.run([sys.executable, "-m", "mpgreedy", *args], capture_output=True).stdout


def test_criterion_9_determinism():
    commands = [
        (["worstcase", "--variant", "B", "--n", "3", "--k", "2", "--m", "2"], None),
        (["sweep", "--instances", "60", "--seed", "4", "--csv", "-"], ["--workers", "2"]),
        (["montecarlo", "--trials", "60", "--seed", "4", "--csv", "-"], ["--workers", "2"]),
        (["check", "--samples", "2000"], None),
    ]
    bad = []
    for args, parallel in commands:
        first = _cli(args)
        runs = [_cli(args)] + ([_cli(args + parallel)] if parallel else [])
        if not first or any(r != first for r in runs):
            bad.append(args[0])
    ok = not bad
    assert report(9, ok, f"{len(commands)} commands repeated byte-identically "
                         f"(sweep/montecarlo also with --workers 2); mismatches: {bad or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
