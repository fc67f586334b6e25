"""Cross-checks of the cost model against independent numerical routes."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .calculus import derivative_diagnostic
from .cost import HOLDING_TERMS, holding_terms_closed_form, holding_terms_quadrature, total_cost
from .errors import EPQError
from .model import ScenarioParams, derive, rework_time, rework_time_from_levels

RESIDUAL_FLOOR = 1e-12


@dataclass(frozen=True)
class Tolerances:
    quadrature: float = 1e-6
    fd_first: float = 1e-6
    fd_second: float = 1e-4
    identity: float = 1e-9


def rel(value: float, reference: float, floor: float = RESIDUAL_FLOOR) -> float:
    if value == reference:
        return 0.0
    return abs(value - reference) / max(floor, abs(reference))


@dataclass
class TermRow:
    term: str
    closed_form: float
    quadrature: float
    residual: float
    divergent: bool
    tp1: float


@dataclass
class ValidationReport:
    terms: dict[str, TermRow]
    max_residual: float
    worst_term: str | None
    rework_time_residual: float
    fd_first_residual: float
    fd_second_residual: float
    stated_first_residual: float
    stated_second_residual: float
    stated_first_terms: list[str]
    stated_second_terms: list[str]
    additivity_residual: float
    closure_residual: float
    divergent_terms: list[str]
    infeasible_samples: list[float]
    boundary_flags: list[str]
    tolerances: Tolerances
    breaches: list[str] = field(default_factory=list)
    passed: bool = True

    def as_dict(self) -> dict:
        out = asdict(self)
        out["terms"] = {k: asdict(v) for k, v in self.terms.items()}
        return out


def validate_scenario(scenario: ScenarioParams, tp1_samples: Sequence[float],
                      tolerances: Tolerances | None = None,
                      perturb: Mapping[str, float] | None = None) -> ValidationReport:
    """Run every independent check at each sample and keep the worst cases.

    Checks: closed-form vs quadrature holding terms, derivatives vs finite
    differences, the two rework-time relations, cost additivity and cycle
    closure. Failures are recorded in the report, never raised.
    """
    tol = tolerances or Tolerances()
    rows: dict[str, TermRow] = {}
    divergent: set[str] = set()
    worst = dict(rework_time=0.0, fd1=0.0, fd2=0.0, p1=0.0, p2=0.0, add=0.0, close=0.0)
    stated1: set[str] = set()
    stated2: set[str] = set()
    infeasible = []
    for tp1 in map(float, tp1_samples):
        try:
            dq = derive(scenario, tp1)
            closed = holding_terms_closed_form(scenario, tp1, perturb=perturb)
            # divergent integrals are compared through their finite part and flagged
            quad = holding_terms_quadrature(scenario, tp1, tol=tol.quadrature * 1e-3, finite_part=True)
            breakdown = total_cost(scenario, tp1, perturb=perturb)
            d1 = derivative_diagnostic(scenario, tp1, 1, tol.fd_first)
            d2 = derivative_diagnostic(scenario, tp1, 2, tol.fd_second)
        except EPQError:
            infeasible.append(tp1)
            continue
        for label in HOLDING_TERMS:
            est = quad[label]
            r = rel(closed[label], est.value)
            if est.divergent:
                divergent.add(label)
            if label not in rows or r > rows[label].residual:
                rows[label] = TermRow(label, closed[label], est.value, r, est.divergent, tp1)
        tp2 = rework_time(scenario.process, tp1)
        if tp2 > 0:
            worst["rework_time"] = max(worst["rework_time"], rel(rework_time_from_levels(scenario, dq.H2, dq.H3), tp2))
        worst["fd1"] = max(worst["fd1"], d1.exact_residual)
        worst["fd2"] = max(worst["fd2"], d2.exact_residual)
        worst["p1"] = max(worst["p1"], d1.stated_residual)
        worst["p2"] = max(worst["p2"], d2.stated_residual)
        if not d1.stated_ok:
            stated1.update(d1.divergent_terms)
        if not d2.stated_ok:
            stated2.update(d2.divergent_terms)
        b = breakdown
        parts = b.pc + b.bc + b.rc + b.sc + b.hc_main + b.hc_rework
        worst["add"] = max(worst["add"], rel(parts, b.total))
        closure = scenario.ts1 + dq.ts2 + tp1 + dq.tp2 + dq.td
        worst["close"] = max(worst["close"], rel(closure, dq.T))

    breaches = [f"term:{k}" for k, row in rows.items() if row.residual > tol.quadrature]
    checks = {
        "rework_time": (worst["rework_time"], tol.identity),
        "fd_first": (worst["fd1"], tol.fd_first),
        "fd_second": (worst["fd2"], tol.fd_second),
        "additivity": (worst["add"], tol.identity),
        "closure": (worst["close"], tol.identity),
    }
    breaches += [name for name, (value, limit) in checks.items() if value > limit]
    if not rows:
        breaches.append("no feasible samples")
    worst_row = max(rows.values(), key=lambda r: r.residual, default=None)
    return ValidationReport(
        terms=rows,
        max_residual=worst_row.residual if worst_row else math.nan,
        worst_term=worst_row.term if worst_row and worst_row.residual > 0 else None,
        rework_time_residual=worst["rework_time"],
        fd_first_residual=worst["fd1"],
        fd_second_residual=worst["fd2"],
        stated_first_residual=worst["p1"],
        stated_second_residual=worst["p2"],
        stated_first_terms=sorted(stated1),
        stated_second_terms=sorted(stated2),
        additivity_residual=worst["add"],
        closure_residual=worst["close"],
        divergent_terms=[k for k in HOLDING_TERMS if k in divergent],
        infeasible_samples=infeasible,
        boundary_flags=scenario.boundary_flags(),
        tolerances=tol,
        breaches=breaches,
        passed=not breaches,
    )
