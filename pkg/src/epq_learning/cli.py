"""Command line interface: ``epq evaluate|optimize|sweep|validate``.

Exit codes: 0 ok, 1 input error, 2 infeasible, 3 numeric domain,
4 optimizer/oracle disagreement, 5 validation failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import second_derivative_terms
from .cost import tc, total_cost
from .errors import (
    DomainError,
    EPQError,
    InfeasibleError,
    InvalidRunTimeError,
    QuadratureError,
    ScenarioError,
)
from .model import derive
from .optimize import feasible_bracket, grid_oracle, minimize, sweep_learning_rates
from .oracle import validate_scenario
from .scenario_io import load_scenario, load_sweep

log = logging.getLogger("epq_learning")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_DOMAIN, EXIT_DISAGREE, EXIT_VALIDATION = range(6)
CURVE_POINTS = 400
GRID_POINTS = 10_000
VALIDATE_SAMPLES = 20
SWEEP_HEADER = "alpha1,alpha2,alphas,bp1,bp2,bs,tp1_star,tc_star,feasible,convex"
COST_NOTE = "# tc in $ per production cycle"


def _num(v) -> str:
    return f"{v:.9g}"


def _flag(v: bool) -> str:
    return "true" if v else "false"


def _emit(args, payload: dict, table: list[str]):
    if args.format == "machine":
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        print("\n".join(table))


def _rows(pairs, width=22) -> list[str]:
    out = []
    for key, value in pairs:
        text = _num(value) if isinstance(value, float) else str(value)
        out.append(f"  {key:<{width}} {text}")
    return out


def cmd_evaluate(args) -> int:
    doc = load_scenario(args.scenario)
    scenario = doc.scenario()
    tp1 = args.tp1
    infeasible = None
    try:
        derive(scenario, tp1)
    except InvalidRunTimeError:
        raise
    except InfeasibleError as exc:
        # still show the cost pieces, but flag the run time and exit 2
        infeasible = str(exc)
    check = infeasible is None
    dq = derive(scenario, tp1, check=check)
    b = total_cost(scenario, tp1, check=check)
    payload = {
        "command": "evaluate",
        "units": "$ per production cycle",
        "scenario": doc.model_dump(),
        "tp1": tp1,
        "feasible": check,
        "infeasibility": infeasible,
        "breakdown": b.as_dict(),
        "holding_terms": dict(b.terms),
        "derived": asdict(dq),
    }
    table = [f"Cost per cycle at tp1 = {_num(tp1)} years"]
    table += _rows([("PC", b.pc), ("BC", b.bc), ("RC", b.rc), ("SC", b.sc),
                    ("HC (h)", b.hc_main), ("HC (h1)", b.hc_rework), ("TC", b.total)])
    table.append("Holding terms (weighted)")
    table += _rows(b.terms.items())
    table.append("Derived quantities")
    table += _rows(asdict(dq).items())
    if infeasible:
        table.append(f"INFEASIBLE: {infeasible}")
    _emit(args, payload, table)
    return EXIT_OK if check else EXIT_INFEASIBLE


def _parse_bracket(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ScenarioError(f"bracket must be 'lo,hi', got {text!r}") from None
    return lo, hi


def cmd_optimize(args) -> int:
    doc = load_scenario(args.scenario)
    scenario = doc.scenario()
    bracket = _parse_bracket(args.bracket) if args.bracket else doc.bracket
    tol = args.tol if args.tol is not None else doc.solver.tol
    res = minimize(scenario, bracket, tol)
    grid = grid_oracle(scenario, res.bracket, GRID_POINTS)
    delta = res.tp1_star - grid.tp1_best
    resolution = grid.step_at(grid.tp1_best)
    agree = abs(delta) <= resolution and res.tc_star <= grid.tc_best * (1 + 1e-12) + 1e-12
    conv = res.convexity.as_dict() if res.convexity else None
    payload = {
        "command": "optimize",
        "units": "$ per production cycle",
        "scenario": doc.model_dump(),
        "tp1_star": res.tp1_star,
        "tc_star": res.tc_star,
        "breakdown": res.breakdown.as_dict(),
        "iterations": res.iterations,
        "bracket": list(res.bracket),
        "method": res.method,
        "on_boundary": res.on_boundary,
        "converged": res.converged,
        "stationarity": res.stationarity,
        "convexity": conv,
        "oracle": {"tp1_best": grid.tp1_best, "tc_best": grid.tc_best, "delta": delta,
                   "resolution": resolution, "agree": agree},
        "warnings": res.warnings,
    }
    table = ["Optimal run time"]
    table += _rows([
        ("tp1*", res.tp1_star), ("TC*", res.tc_star), ("bracket", f"{_num(res.bracket[0])} .. {_num(res.bracket[1])}"),
        ("on boundary", res.on_boundary), ("method", res.method), ("evaluations", res.iterations),
        ("dTC/dtp1 at tp1*", res.stationarity),
        ("convexity (stated)", conv["verdict"] if conv else "n/a"),
        ("convexity (exact)", conv["exact_verdict"] if conv else "n/a"),
        ("grid oracle tp1", grid.tp1_best), ("oracle delta", delta), ("oracle resolution", resolution),
    ])
    table += _rows(res.breakdown.as_dict().items())
    table += [f"  warning: {w}" for w in res.warnings]
    _emit(args, payload, table)
    if not agree:
        log.error("optimizer and grid oracle disagree: delta=%g, resolution=%g", delta, resolution)
        return EXIT_DISAGREE
    return EXIT_OK


def _write_text(path: Path, lines: list[str]):
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_sweep(args) -> int:
    sweep, base = load_sweep(args.spec)
    template = base.scenario()
    result = sweep_learning_rates(template, sweep.axis(), base.bracket, base.solver.tol)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        lines = [COST_NOTE, SWEEP_HEADER]
        for row in result.rows:
            coeffs = row.coefficients or (math.nan,) * 3
            lines.append(",".join(
                [_num(a) for a in row.alphas] + [_num(b) for b in coeffs]
                + [_num(row.tp1_star), _num(row.tc_star), _flag(row.feasible), _flag(row.convex)]
            ))
        _write_text(out / "sweep.csv", lines)
        for i, row in enumerate(result.rows):
            if row.result is None:
                continue
            scenario = template.with_rates(*row.alphas)
            lo, hi = row.result.bracket
            curve = [COST_NOTE, "tp1,tc"]
            for t in np.geomspace(lo, hi, CURVE_POINTS):
                curve.append(f"{_num(float(t))},{_num(tc(scenario, float(t)))}")
            _write_text(out / f"curve_{i}.csv", curve)
    except OSError as exc:
        raise ScenarioError(f"cannot write to {out}: {exc}") from exc
    payload = {
        "command": "sweep",
        "out": str(out),
        "rows": [
            {"alphas": list(r.alphas), "coefficients": r.coefficients and list(r.coefficients),
             "tp1_star": r.tp1_star, "tc_star": r.tc_star, "feasible": r.feasible,
             "convex": r.convex, "error": r.error}
            for r in result.rows
        ],
    }
    table = [f"wrote {out / 'sweep.csv'}", SWEEP_HEADER] + lines[2:]
    table += [f"  row {i}: {r.error}" for i, r in enumerate(result.rows) if r.error]
    _emit(args, payload, table)
    return EXIT_OK


def _parse_fault(text):
    try:
        label, eps = text.split("=")
        return {label: float(eps)}
    except ValueError:
        raise ScenarioError(f"fault must be 'term=eps', got {text!r}") from None


def cmd_validate(args) -> int:
    doc = load_scenario(args.scenario)
    scenario = doc.scenario()
    lo, hi = feasible_bracket(scenario, doc.bracket)
    samples = np.geomspace(lo, hi, args.samples)
    perturb = _parse_fault(args.inject_fault) if args.inject_fault else None
    report = validate_scenario(scenario, samples, doc.tolerances, perturb=perturb)
    d2 = second_derivative_terms(scenario, float(samples[0]))
    payload = {"command": "validate", "scenario": doc.model_dump(), "branch": d2.branch,
               **report.as_dict()}
    table = ["Closed form vs quadrature (worst relative residual per term)"]
    for row in report.terms.values():
        note = "  divergent, finite part" if row.divergent else ""
        table.append(f"  {row.term:<20} {row.residual:12.3e}{note}")
    table += _rows([
        ("rework time identity", report.rework_time_residual),
        ("fd first (exact)", report.fd_first_residual),
        ("fd second (exact)", report.fd_second_residual),
        ("fd first (stated)", report.stated_first_residual),
        ("fd second (stated)", report.stated_second_residual),
        ("additivity", report.additivity_residual),
        ("cycle closure", report.closure_residual),
        ("second-derivative branch", d2.branch),
    ])
    if report.stated_first_terms:
        table.append("  stated first derivative disagrees in: " + ", ".join(report.stated_first_terms))
    if report.stated_second_terms:
        table.append("  stated second derivative disagrees in: " + ", ".join(report.stated_second_terms))
    if report.boundary_flags:
        table.append("  boundary: " + ", ".join(report.boundary_flags))
    if report.infeasible_samples:
        table.append(f"  infeasible samples: {len(report.infeasible_samples)}")
    table.append("PASS" if report.passed else
                 f"FAIL: worst term {report.worst_term}; breaches: {', '.join(report.breaches)}")
    _emit(args, payload, table)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "machine"), default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="cost breakdown at one run time")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tp1", type=float, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", parents=[common], help="optimal run time")
    p.add_argument("--scenario", required=True)
    p.add_argument("--bracket", help="lo,hi in years")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="optimise over learning-rate triples")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="cross-check against numerical oracles")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=VALIDATE_SAMPLES)
    p.add_argument("--inject-fault", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def _configure_logging():
    level = os.environ.get("EPQ_LOG", "off").lower()
    levels = {"info": logging.INFO, "debug": logging.DEBUG}
    if level in levels:
        logging.basicConfig(level=levels[level], stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    else:
        logging.basicConfig(level=logging.ERROR, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DomainError, QuadratureError) as exc:
        print(f"numeric domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except EPQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
