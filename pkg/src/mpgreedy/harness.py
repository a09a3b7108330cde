"""Command-line experiments.

Subcommands: ``worstcase``, ``sweep``, ``montecarlo`` and ``check``. Every
output embeds the tool version and the full configuration. Trials draw
their randomness from ``(seed, trial index)`` alone, so any worker count
gives byte-identical output.

Exit codes: 0 success, 1 property failure or bound violation,
2 invalid specification, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import __version__
from ._backend import BACKEND
from .analysis import (
    augmented_alpha,
    bound_report,
    brute_force_opt,
    check_lemma1,
    ratio,
    thm1_lower,
    thm1_upper,
    thm2_bounds,
)
from .errors import BudgetExceeded, InvalidSpec
from .instances import CameraScenarioSpec, gen_camera_scenario, gen_random_coverage, gen_worst_case
from .policies import AUGMENTED, INDEPENDENT, NOMINAL, run_policy
from .setcore import default_budget

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
TOL = 1e-9
SWEEP_SCHEMA = "mpgreedy.sweep/1"
MONTECARLO_SCHEMA = "mpgreedy.montecarlo/1"
HIST_EDGES = np.linspace(0.5, 3.5, 61)


def _header(command: str, config: dict) -> dict:
    return {"tool": "mpgreedy", "version": __version__, "command": command, "config": config}


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=str)


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Fraction):
        return repr(float(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(command: str, config: dict, columns: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# {_dump(_header(command, config))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


# --- worstcase ---------------------------------------------------------------

def run_worstcase(variant: str, n: int, k: int, m: int) -> dict:
    inst, expected = gen_worst_case(variant, n, k, m)
    budget = default_budget()
    trace = run_policy(inst, AUGMENTED, budget)
    opt = brute_force_opt(inst, budget)
    achieved = ratio(trace.f_total, opt.value)
    closed = thm1_upper(n, k, m)
    report = bound_report(n, k, m, achieved=achieved)
    out = _header("worstcase", {"variant": variant.upper(), "n": n, "k": k, "m": m})
    out.update({
        "f_ag": trace.f_total,
        "f_opt": opt.value,
        "achieved_ratio": str(achieved),
        "expected_ratio": str(expected),
        "closed_form_ratio": str(closed),
        "exact_match": achieved == expected == closed,
        "bounds": report.to_dict(),
        "trace": trace.to_dict(),
        "opt": opt.to_dict(),
    })
    return out


def cmd_worstcase(args) -> int:
    result = run_worstcase(args.variant, args.n, args.k, args.m)
    text = _dump(result) + "\n"
    if args.json:
        _emit(text, args.json)
    print(f"variant={result['config']['variant']} n={args.n} k={args.k} m={args.m} "
          f"achieved={result['achieved_ratio']} closed_form={result['closed_form_ratio']} "
          f"thm1=[{result['bounds']['thm1_lower_exact']}, {result['bounds']['thm1_upper_exact']}]")
    return EXIT_OK if result["exact_match"] else EXIT_FAIL


# --- sweep -------------------------------------------------------------------

SWEEP_COLUMNS = [
    "index", "seed", "n", "k", "m", "f_ng", "f_ind", "f_ag", "f_opt",
    "ratio_ng_opt", "ratio_ind_opt", "ratio_ag_opt", "ratio_ag_ng",
    "thm1_lower", "thm1_upper", "thm2_lower", "thm2_upper",
    "lemma_premise_min_slack", "lemma_conclusion_slack", "violations",
]


@dataclass(frozen=True)
class SweepConfig:
    instances: int = 100
    seed: int = 0
    n: int = 3
    k: int = 2
    m: int = 2
    max_elems: int = 6
    cells: int = 12
    weight_lo: int = 1
    weight_hi: int = 3
    overlap: float = 0.2
    workers: int = 1


def evaluate_instance(inst, index=None, seed=None) -> dict:
    """Run all three policies and the optimum on one instance, checking every bound."""
    budget = default_budget()
    n, k, m = inst.n, inst.k, inst.m
    ng = run_policy(inst, NOMINAL, budget)
    ind = run_policy(inst, INDEPENDENT, budget)
    ag = run_policy(inst, AUGMENTED, budget)
    opt = brute_force_opt(inst, budget)
    row = {"index": index, "seed": seed, "n": n, "k": k, "m": m,
           "f_ng": ng.f_total, "f_ind": ind.f_total, "f_ag": ag.f_total, "f_opt": opt.value}
    r_ng, r_ag, r_agng = ratio(ng.f_total, opt.value), ratio(ag.f_total, opt.value), ratio(ag.f_total, ng.f_total)
    row.update(ratio_ng_opt=r_ng, ratio_ind_opt=ratio(ind.f_total, opt.value), ratio_ag_opt=r_ag, ratio_ag_ng=r_agng)
    violations = []
    if float(r_ng) < 0.5 - TOL:
        violations.append("nominal_half")
    # augmented agents may pick forwarded elements, so only the message-free
    # policies are bounded by the per-agent optimum
    if max(float(ng.f_total), float(ind.f_total)) > float(opt.value) + TOL:
        violations.append("opt_not_max")
    if n >= 2:
        lo1, hi1 = thm1_lower(n, k, m), thm1_upper(n, k, m)
        lo2, hi2 = thm2_bounds(n, k, m)
        row.update(thm1_lower=lo1, thm1_upper=hi1, thm2_lower=lo2, thm2_upper=hi2)
        if float(r_ag) < float(lo1) - TOL:
            violations.append("thm1_lower")
        if not float(lo2) - TOL <= float(r_agng) <= float(hi2) + TOL:
            violations.append("thm2")
    else:
        row.update(thm1_lower=None, thm1_upper=None, thm2_lower=None, thm2_upper=None)
    if m == 0 and [(s.x, s.z) for s in ag.steps] != [(s.x, s.z) for s in ng.steps]:
        violations.append("m0_equivalence")
    if m >= 1:
        lemma = check_lemma1(inst, ag, opt, augmented_alpha(k, m), budget)
        row.update(lemma_premise_min_slack=lemma.min_premise_slack if lemma.steps else None,
                   lemma_conclusion_slack=lemma.conclusion_slack)
        if not lemma.premise_holds:
            violations.append("lemma_premise")
        elif not lemma.conclusion_holds:
            violations.append("lemma_conclusion")
    else:
        row.update(lemma_premise_min_slack=None, lemma_conclusion_slack=None)
    row["violations"] = ";".join(violations)
    return row


def _sweep_one(job) -> dict:
    cfg, index = job
    inst = gen_random_coverage(cfg.n, cfg.max_elems, cfg.cells, (cfg.weight_lo, cfg.weight_hi),
                               cfg.k, cfg.m, seed=[cfg.seed, index], overlap=cfg.overlap)
    return evaluate_instance(inst, index, cfg.seed)


def run_sweep(cfg: SweepConfig):
    rows = _map(_sweep_one, [(cfg, i) for i in range(cfg.instances)], cfg.workers)
    config = asdict(cfg)
    config.pop("workers")
    text = _csv_text("sweep", config, SWEEP_COLUMNS, rows)
    n_viol = sum(1 for r in rows if r["violations"])
    return rows, text, n_viol


def cmd_sweep(args) -> int:
    cfg = SweepConfig(args.instances, args.seed, args.n, args.k, args.m, args.max_elems, args.cells,
                      args.weights[0], args.weights[1], args.overlap, args.workers)
    rows, text, n_viol = run_sweep(cfg)
    if args.csv:
        _emit(text, args.csv)
    config = asdict(cfg)
    config.pop("workers")
    summary = _header("sweep", config)
    summary.update({"schema": SWEEP_SCHEMA, "instances": len(rows), "violations": n_viol,
                    "min_ratio_ng_opt": _fmt(min(r["ratio_ng_opt"] for r in rows)) if rows else None,
                    "min_ratio_ag_opt": _fmt(min(r["ratio_ag_opt"] for r in rows)) if rows else None})
    if args.csv != "-":
        print(_dump(summary))
    return EXIT_OK if n_viol == 0 else EXIT_FAIL


# --- montecarlo ----------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = 10_000
    seed: int = 0
    n: int = 3
    k: int = 2
    m: int = 2
    images: int = 10
    targets: int = 3
    focal_px: float = 50.0
    noise_px: float = 1.0
    fov_deg: float = 90.0
    prior: float = 1e-2
    workers: int = 1


@dataclass
class HistogramData:
    bin_edges: list
    counts: list
    n_samples: int
    fraction_equal_one: float
    fraction_above_one: float
    fraction_below_one: float

    def to_dict(self) -> dict:
        return asdict(self)


def histogram(ratios, edges=HIST_EDGES, tol: float = TOL) -> HistogramData:
    r = np.asarray(ratios, dtype=float)
    counts, _ = np.histogram(np.clip(r, edges[0], edges[-1]), bins=edges)
    n = r.size
    eq = int(np.sum(np.abs(r - 1.0) <= tol))
    above = int(np.sum(r > 1.0 + tol))
    below = n - eq - above
    frac = (lambda c: c / n) if n else (lambda c: 0.0)
    return HistogramData([float(e) for e in edges], counts.tolist(), n, frac(eq), frac(above), frac(below))


def _camera_spec(cfg: MonteCarloConfig) -> CameraScenarioSpec:
    return CameraScenarioSpec(n_vehicles=cfg.n, images_per_vehicle=cfg.images, n_targets=cfg.targets,
                              focal_px=cfg.focal_px, noise_px=cfg.noise_px, fov_deg=cfg.fov_deg,
                              k=cfg.k, m=cfg.m, prior=cfg.prior, seed=cfg.seed)


def _camera_trial(job) -> dict:
    cfg, index = job
    spec = _camera_spec(cfg)
    inst, _ = gen_camera_scenario(spec, np.random.default_rng([cfg.seed, index]))
    budget = default_budget()
    ng = run_policy(inst, NOMINAL, budget)
    ag = run_policy(inst, AUGMENTED, budget)
    return {"trial": index, "f_ng": float(ng.f_total), "f_ag": float(ag.f_total),
            "ratio": float(ratio(ag.f_total, ng.f_total))}


def run_montecarlo(cfg: MonteCarloConfig):
    rows = _map(_camera_trial, [(cfg, i) for i in range(cfg.trials)], cfg.workers)
    lo, hi = thm2_bounds(cfg.n, cfg.k, cfg.m)
    for r in rows:
        r["in_bounds"] = float(lo) - TOL <= r["ratio"] <= float(hi) + TOL
    hist = histogram([r["ratio"] for r in rows])
    config = asdict(cfg)
    config.pop("workers")
    summary = _header("montecarlo", config)
    ratios = [r["ratio"] for r in rows]
    summary.update({
        "schema": MONTECARLO_SCHEMA,
        "backend": BACKEND,
        "thm2_lower": float(lo), "thm2_upper": float(hi),
        "thm2_lower_exact": str(lo), "thm2_upper_exact": str(hi),
        "out_of_bounds": sum(1 for r in rows if not r["in_bounds"]),
        "min_ratio": min(ratios) if ratios else None,
        "max_ratio": max(ratios) if ratios else None,
        "mean_ratio": float(np.mean(ratios)) if ratios else None,
        "histogram": hist.to_dict(),
    })
    csv_text = _csv_text("montecarlo", config, ["trial", "f_ng", "f_ag", "ratio", "in_bounds"], rows)
    return rows, summary, csv_text


def cmd_montecarlo(args) -> int:
    cfg = MonteCarloConfig(args.trials, args.seed, args.n, args.k, args.m, args.images, args.targets,
                           args.focal_px, args.noise_px, args.fov_deg, args.prior, args.workers)
    rows, summary, csv_text = run_montecarlo(cfg)
    if args.csv:
        _emit(csv_text, args.csv)
    if args.hist:
        _emit(_dump(summary) + "\n", args.hist)
    if args.csv != "-":
        h = summary["histogram"]
        print(_dump({key: summary[key] for key in summary if key != "histogram"} | {
            "fraction_equal_one": h["fraction_equal_one"],
            "fraction_above_one": h["fraction_above_one"],
            "fraction_below_one": h["fraction_below_one"]}))
    return EXIT_OK if summary["out_of_bounds"] == 0 else EXIT_FAIL


# --- check -------------------------------------------------------------------

def cmd_check(args) -> int:
    from .checks import run_checks

    report = run_checks(cap=args.exhaustive_cap, n_samples=args.samples, inject_supermodular=args.inject_supermodular)
    print(_dump(report))
    return EXIT_OK if report["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpgreedy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mpgreedy {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("worstcase", help="replay a worst-case construction")
    w.add_argument("--variant", required=True, type=str.upper, choices=["A", "B"])
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--k", type=int, required=True)
    w.add_argument("--m", type=int, required=True)
    w.add_argument("--json", help="write the full result as JSON to this path")
    w.set_defaults(func=cmd_worstcase)

    s = sub.add_parser("sweep", help="random coverage instances versus the optimum")
    s.add_argument("--instances", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--max-elems", type=int, default=6, help="max elements per agent")
    s.add_argument("--cells", type=int, default=12)
    s.add_argument("--weights", type=int, nargs=2, default=[1, 3], metavar=("LO", "HI"))
    s.add_argument("--overlap", type=float, default=0.2)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", help="CSV output path ('-' for stdout)")
    s.set_defaults(func=cmd_sweep)

    mc = sub.add_parser("montecarlo", help="camera-fusion Monte Carlo experiment")
    mc.add_argument("--trials", type=int, default=10_000, help="use 1000000 for the full-length run")
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--n", type=int, default=3)
    mc.add_argument("--k", type=int, default=2)
    mc.add_argument("--m", type=int, default=2)
    mc.add_argument("--images", type=int, default=10)
    mc.add_argument("--targets", type=int, default=3)
    mc.add_argument("--focal-px", type=float, default=50.0)
    mc.add_argument("--noise-px", type=float, default=1.0)
    mc.add_argument("--fov-deg", type=float, default=90.0)
    mc.add_argument("--prior", type=float, default=1e-2)
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--csv", help="per-trial CSV output path ('-' for stdout)")
    mc.add_argument("--hist", help="histogram and summary JSON output path")
    mc.set_defaults(func=cmd_montecarlo)

    c = sub.add_parser("check", help="run the property suites")
    c.add_argument("--exhaustive-cap", type=int, default=14)
    c.add_argument("--samples", type=int, default=10_000)
    c.add_argument("--inject-supermodular", action="store_true",
                   help="add a supermodular test double that must be rejected")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "trials", 1) < 1:
            raise InvalidSpec("trials must be >= 1")
        return args.func(args)
    except InvalidSpec as exc:
        print(f"invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"enumeration budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
