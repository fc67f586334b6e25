"""Derivatives of the total cost.

Three independent routes are kept side by side:

* ``first_derivative`` / ``second_derivative_terms`` evaluate the stated
  derivative expressions term by term, verbatim;
* ``cost_derivative`` is the hand-derived derivative of each closed-form
  cost term as implemented in :mod:`epq_learning.cost`;
* ``central_difference`` / ``second_difference`` differentiate the
  implemented cost numerically and act as the referee.

``derivative_diagnostic`` compares all three per cost term.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .cost import HOLDING_TERMS, cost_terms, tc, total_cost
from .errors import EPQError
from .model import ScenarioParams, derive, feasibility_margin, rework_setup_time

EPS = sys.float_info.epsilon
LINEAR_TERMS = ("production", "setup_breakdown", "rework", "scrap")
COST_TERMS = LINEAR_TERMS + HOLDING_TERMS

# second-derivative terms: label -> cost term it belongs to
SECOND_TERMS = {
    "ramp_curvature": "production_ramp",
    "repair_curvature": "repair_hold",
    "stock_curvature": "rework_stock",
    "rework_ramp_curvature": "rework_ramp",
    "defective_curvature": "defective_build",
    "rework_hold_curvature": "rework_hold",
    "depletion_margin": "depletion",
    "depletion_setup": "depletion",
}
NEGATIVE_TERMS = ("ramp_curvature", "repair_curvature", "stock_curvature")
POSITIVE_TERMS = ("defective_curvature", "rework_hold_curvature", "depletion_margin", "depletion_setup")
# bp2 within this of 1/2 sits on the branch boundary
BRANCH_ATOL = 1e-12


def _shared(scenario, tp1):
    p = scenario.process
    lam = p.lam
    k = lam * (1 - p.theta) / p.P1
    ts2 = rework_setup_time(scenario.ts1, scenario.bs)
    return p, lam, k, ts2


def _kpow(k, e):
    # k == 0 means no rework phase; those terms vanish
    return 0.0 if k == 0 else k ** e


def first_derivative_terms(scenario: ScenarioParams, tp1: float) -> dict[str, float]:
    """Closed-form first derivative, grouped by the cost term of each piece.

    Cost terms with no counterpart in the stated expression map to 0.
    """
    p, lam, k, ts2 = _shared(scenario, tp1)
    c = scenario.costs
    h, h1 = c.h, c.h1
    b1, b2 = scenario.bp1, scenario.bp2
    t = tp1
    m = feasibility_margin(p)
    S = scenario.ts1 + ts2
    r1 = (1 - b1) ** (1 / (2 - b1))
    r2 = (1 - b2) ** (1 / (2 - b2))
    out = dict.fromkeys(COST_TERMS, 0.0)
    out["production"] = c.c * p.P
    out["rework"] = c.cr * p.P * p.x * (1 - p.theta)
    out["scrap"] = c.cs * p.P * p.x * p.theta
    out["production_ramp"] = h * (1 / (p.P - p.D - lam) * t ** (-1 / b1))
    out["defective_build"] = h * (1 / lam * t ** (1 / (1 - b1))) if lam > 0 else 0.0
    out["repair_hold"] = h * (r1 / (2 - b1) * ts2 * t ** (1 / (2 - b1) - 1))
    out["rework_hold"] = h * (
        k * ((3 - b1) / (2 - b1)) * r1 * t ** ((3 - b1) / (2 - b1) - 1) - p.D * ts2 * k
    )
    e2 = (1 - b2) / b2
    out["rework_ramp"] = h * (1 / (p.P1 - lam) * (b2 / (1 - b2)) * _kpow(k, e2) * t ** (e2 - 1))
    out["depletion"] = h * (
        0.5 * m * (
            ((3 - b2) / (2 - b2)) * k * r2 * t ** ((3 - b2) / (2 - b2) - 1)
            + ((3 - b1) / (2 - b1)) * r1 * t ** ((3 - b1) / (2 - b1) - 1)
        )
        - 0.5 * S * (
            (1 / (2 - b2)) * k * r2 * t ** (1 / (2 - b2) - 1)
            + (1 / (2 - b1)) * r1 * t ** (1 / (2 - b1) - 1)
        )
    )
    out["rework_stock"] = h1 / p.P1 * t ** (-1 / (1 - b1))
    return out


def first_derivative(scenario: ScenarioParams, tp1: float) -> float:
    """Closed-form dTC/dtp1 as stated by the model."""
    derive(scenario, tp1)
    return math.fsum(first_derivative_terms(scenario, tp1).values())


def stated_second_terms(scenario: ScenarioParams, tp1: float) -> dict[str, float]:
    """Closed-form second-derivative terms of the model, kept verbatim.

    Only the first and third terms carry their cost weight; the rest are
    evaluated without ``h``, so the sum is not the exact curvature.
    """
    p, lam, k, ts2 = _shared(scenario, tp1)
    c = scenario.costs
    b1, b2 = scenario.bp1, scenario.bp2
    t = tp1
    m = feasibility_margin(p)
    S = scenario.ts1 + ts2
    r1 = (1 - b1) ** (1 / (2 - b1))
    e2 = (1 - b2) / b2
    rk2 = (k * (1 - b2)) ** (1 / (2 - b2))
    g1, g2 = (3 - b1) / (2 - b1), (3 - b2) / (2 - b2)
    a1, a2 = 1 / (2 - b1), 1 / (2 - b2)
    return {
        "ramp_curvature": -c.h * 1 / (p.P - p.D - lam) * (1 / b1) * t ** (-1 / b1),
        "repair_curvature": r1 / (2 - b1) * (1 / (2 - b1) - 1) * ts2 * t ** (1 / (2 - b1) - 2),
        "stock_curvature": c.h1 / p.P1 * (-1 / (1 - b1)) * t ** (-1 / (1 - b1) - 1),
        "rework_ramp_curvature": 1 / (p.P1 - lam) * (b2 / (1 - b2)) * (e2 - 1) * _kpow(k, e2) * t ** (e2 - 2),
        "defective_curvature": 1 / lam * (1 / (1 - b1)) * t ** (1 / (1 - b1)) if lam > 0 else 0.0,
        "rework_hold_curvature": k * g1 * (g1 - 1) * r1 * t ** (g1 - 2),
        "depletion_margin": 0.5 * m * (
            g2 * (g2 - 1) * rk2 * t ** (g2 - 2) + g1 * (g1 - 1) * r1 * t ** (g1 - 2)
        ),
        "depletion_setup": -0.5 * S * (
            a2 * (a2 - 1) * rk2 * t ** (a2 - 2) + a1 * (a1 - 1) * r1 * t ** (a1 - 2)
        ),
    }


@dataclass(frozen=True)
class DerivativeTerms:
    first: float
    second_negative_terms: list[tuple[str, float]]
    second_positive_terms: list[tuple[str, float]]
    second_total: float
    branch: str  # "four-negative" when bp2 >= 1/2, else "three-negative"
    boundary: bool = False
    preconditions: dict[str, bool] = field(default_factory=dict)


def sign_preconditions(scenario: ScenarioParams) -> dict[str, bool]:
    """Conditions under which each closed-form term keeps its sign."""
    p = scenario.process
    b1, b2 = scenario.bp1, scenario.bp2
    unit = 0 <= b1 <= 1 and 0 <= b2 <= 1
    return {
        "ramp_curvature": p.P - p.D - p.lam > 0 and 0 < b1 <= 1,
        "repair_curvature": unit,
        "stock_curvature": b1 < 1 and scenario.costs.h1 >= 0,
        "rework_ramp_curvature": p.P1 > p.lam and unit,
        "defective_curvature": p.lam > 0 and b1 < 1,
        "rework_hold_curvature": p.P1 > 0 and unit,
        "depletion_margin": feasibility_margin(p) >= 0,
        "depletion_setup": scenario.ts1 >= 0,
    }


def second_derivative_terms(scenario: ScenarioParams, tp1: float) -> DerivativeTerms:
    """Stated second derivative split into its negative and positive parts."""
    derive(scenario, tp1)
    terms = stated_second_terms(scenario, tp1)
    boundary = abs(scenario.bp2 - 0.5) <= BRANCH_ATOL
    four = boundary or scenario.bp2 > 0.5
    negative = [(k, terms[k]) for k in NEGATIVE_TERMS]
    positive = [(k, terms[k]) for k in POSITIVE_TERMS]
    if four:
        negative.append(("rework_ramp_curvature", terms["rework_ramp_curvature"]))
    else:
        positive.insert(0, ("rework_ramp_curvature", terms["rework_ramp_curvature"]))
    total = sum(v for _, v in negative) + sum(v for _, v in positive)
    return DerivativeTerms(
        first=math.fsum(first_derivative_terms(scenario, tp1).values()),
        second_negative_terms=negative,
        second_positive_terms=positive,
        second_total=total,
        branch="four-negative" if four else "three-negative",
        boundary=boundary,
        preconditions=sign_preconditions(scenario),
    )


def cost_derivative_terms(scenario: ScenarioParams, tp1: float, order: int = 1) -> dict[str, float]:
    """Exact derivative of each implemented closed-form cost term."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    p, lam, k, ts2 = _shared(scenario, tp1)
    c = scenario.costs
    h, h1 = c.h, c.h1
    b1, b2 = scenario.bp1, scenario.bp2
    t = tp1
    m = feasibility_margin(p)
    S = scenario.ts1 + ts2
    first = order == 1

    def power(coef, a):
        # d/dt or d2/dt2 of coef * t**a
        return coef * a * t ** (a - 1) if first else coef * a * (a - 1) * t ** (a - 2)

    a1 = 1 / (2 - b1)
    c1 = (1 - b1) ** a1
    a2 = 1 / (2 - b2)
    c2 = _kpow(k * (1 - b2), a2)
    out = dict.fromkeys(COST_TERMS, 0.0)
    if first:
        out["production"] = c.c * p.P
        out["rework"] = c.cr * p.P * p.x * (1 - p.theta)
        out["scrap"] = c.cs * p.P * p.x * p.theta
        out["repair_defectives"] = h * ts2 * lam
    out["production_ramp"] = h * power(1 / (p.P - p.D - lam) * b1 / (b1 - 1), (b1 - 1) / b1)
    if lam > 0:
        out["defective_build"] = h * power(1 / lam * (1 - b1) / (2 - b1), (2 - b1) / (1 - b1))
    out["repair_hold"] = h * ts2 * power(c1, a1)
    # H3 * tp2 = k * (c1 t**(a1+1) - D ts2 t)
    hold = k * power(c1, a1 + 1)
    if first:
        hold -= k * p.D * ts2
    out["rework_hold"] = h * hold
    if k > 0:
        e = (1 - b2) / b2
        out["rework_ramp"] = h * power(1 / (p.P1 - lam) * b2 / (1 - b2) * k ** e, e)
        q = b2 / (b2 - 1)
        out["rework_stock"] = h1 * power(1 / p.P1 * (b2 - 1) / b2 * k ** q, q)
    # depletion = H2 td / 2 with H2 = c1 t**a1 + c2 t**a2 - D ts2, td = m t - S
    H2 = c1 * t ** a1 + c2 * t ** a2 - p.D * ts2
    dH2 = c1 * a1 * t ** (a1 - 1) + c2 * a2 * t ** (a2 - 1)
    td = m * t - S
    if first:
        out["depletion"] = h * 0.5 * (dH2 * td + H2 * m)
    else:
        d2H2 = c1 * a1 * (a1 - 1) * t ** (a1 - 2) + c2 * a2 * (a2 - 1) * t ** (a2 - 2)
        out["depletion"] = h * 0.5 * (d2H2 * td + 2 * dH2 * m)
    return out


def cost_derivative(scenario: ScenarioParams, tp1: float, order: int = 1) -> float:
    return math.fsum(cost_derivative_terms(scenario, tp1, order).values())


def fd_step(tp1: float, order: int = 1) -> float:
    """Central-difference step: eps**(1/3) or eps**(1/4), relative to tp1.

    A floor of 1 on the scale would swamp run times far below one year,
    where the power-law terms bend sharply.
    """
    return EPS ** (1 / 3 if order == 1 else 1 / 4) * tp1


def central_difference(f, x: float, step: float | None = None) -> float:
    if step is None:
        step = fd_step(x, 1)
    step = min(step, 0.5 * x)
    return (f(x + step) - f(x - step)) / (2 * step)


def second_difference(f, x: float, step: float | None = None) -> float:
    if step is None:
        step = fd_step(x, 2)
    step = min(step, 0.5 * x)
    return (f(x + step) - 2 * f(x) + f(x - step)) / step ** 2


def fd_total(scenario: ScenarioParams, tp1: float, order: int = 1) -> float:
    """Finite difference of the implemented total cost.

    Evaluated without the feasibility gate so a stencil straddling the
    feasible boundary still works. The second difference skips the affine
    cost components: they add no curvature, only round-off.
    """
    if order == 1:
        return central_difference(lambda t: tc(scenario, t, check=False), tp1)
    return second_difference(lambda t: _holding_total(scenario, t), tp1)


def _holding_total(scenario, tp1):
    b = total_cost(scenario, tp1, check=False)
    return b.hc_main + b.hc_rework


def fd_terms(scenario: ScenarioParams, tp1: float, order: int = 1) -> dict[str, float]:
    """Finite difference of every cost term separately."""
    step = min(fd_step(tp1, order), 0.5 * tp1)
    lo = cost_terms(scenario, tp1 - step)
    hi = cost_terms(scenario, tp1 + step)
    if order == 1:
        return {key: (hi[key] - lo[key]) / (2 * step) for key in COST_TERMS}
    mid = cost_terms(scenario, tp1)
    return {key: (hi[key] - 2 * mid[key] + lo[key]) / step ** 2 for key in COST_TERMS}


def relative_residual(value: float, reference: float, floor: float = 1.0) -> float:
    return abs(value - reference) / max(floor, abs(reference))


@dataclass(frozen=True)
class TermResidual:
    term: str
    stated: float
    exact: float
    finite_difference: float
    stated_residual: float
    exact_residual: float


@dataclass(frozen=True)
class DerivativeDiagnostic:
    """Stated and hand-derived derivatives against finite differences.

    ``stated_total`` comes from the stated expressions, ``exact_total``
    from the term-wise derivative of the implemented cost and ``fd_total``
    from differencing the implemented cost.
    """

    order: int
    tp1: float
    stated_total: float
    exact_total: float
    fd_total: float
    stated_residual: float
    exact_residual: float
    terms: list[TermResidual]
    tolerance: float

    @property
    def stated_ok(self) -> bool:
        return self.stated_residual <= self.tolerance

    @property
    def exact_ok(self) -> bool:
        return self.exact_residual <= self.tolerance

    @property
    def divergent_terms(self) -> list[str]:
        """Cost terms whose stated derivative disagrees with the referee.

        A term is named once it carries more than ``1/len(terms)`` of the
        tolerance, so a failing total always names at least one term.
        """
        share = self.tolerance / len(self.terms)
        return [r.term for r in self.terms if r.stated_residual > share]


def _scale(values):
    return max(1.0, max(abs(v) for v in values))


def derivative_diagnostic(scenario: ScenarioParams, tp1: float, order: int = 1,
                          tolerance: float | None = None) -> DerivativeDiagnostic:
    if tolerance is None:
        tolerance = 1e-6 if order == 1 else 1e-4
    if order == 1:
        stated = first_derivative_terms(scenario, tp1)
    else:
        stated = dict.fromkeys(COST_TERMS, 0.0)
        for label, value in stated_second_terms(scenario, tp1).items():
            stated[SECOND_TERMS[label]] += value
    exact = cost_derivative_terms(scenario, tp1, order)
    fd = fd_terms(scenario, tp1, order)
    ref_total = fd_total(scenario, tp1, order)
    stated_total = math.fsum(stated.values())
    exact_total = math.fsum(exact.values())
    # per-term residuals share the scale of the total so tiny terms
    # cannot trip the check on round-off alone
    scale = _scale([ref_total])
    rows = []
    for key in COST_TERMS:
        exact_res = abs(exact[key] - fd[key]) / max(scale, abs(fd[key]))
        # a per-term difference is noisy for large linear pieces; once the
        # exact term is confirmed by it, the exact term is the sharper referee
        ref = exact[key] if exact_res <= tolerance else fd[key]
        rows.append(TermResidual(
            term=key,
            stated=stated[key],
            exact=exact[key],
            finite_difference=fd[key],
            stated_residual=abs(stated[key] - ref) / max(scale, abs(ref)),
            exact_residual=exact_res,
        ))
    return DerivativeDiagnostic(
        order=order,
        tp1=tp1,
        stated_total=stated_total,
        exact_total=exact_total,
        fd_total=ref_total,
        stated_residual=relative_residual(stated_total, ref_total),
        exact_residual=relative_residual(exact_total, ref_total),
        terms=rows,
        tolerance=tolerance,
    )


@dataclass
class ConvexityReport:
    """Sampled sign of the second derivative over a run-time bracket.

    ``verdict`` uses the stated second derivative, ``exact_verdict`` the
    hand-derived second derivative of the implemented cost.
    """

    verdict: str
    exact_verdict: str
    samples: list[float]
    second_stated: list[float]
    second_exact: list[float]
    offending: list[float]
    exact_offending: list[float]
    infeasible: list[float]
    margin: float
    preconditions: dict[str, bool]
    failed_precondition: bool

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "exact_verdict": self.exact_verdict,
            "n_samples": len(self.samples),
            "offending": self.offending,
            "exact_offending": self.exact_offending,
            "infeasible": self.infeasible,
            "margin": self.margin,
            "preconditions": self.preconditions,
            "failed_precondition": self.failed_precondition,
        }


def _verdict(n_feasible, offending):
    if n_feasible == 0:
        return "UNDETERMINED"
    return "NONCONVEX" if offending else "CONVEX"


def convexity_verdict(scenario: ScenarioParams, tp1_lo: float, tp1_hi: float,
                      n_samples: int = 64) -> ConvexityReport:
    if not 0 < tp1_lo < tp1_hi:
        raise ValueError(f"need 0 < tp1_lo < tp1_hi, got {tp1_lo}, {tp1_hi}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    grid = np.geomspace(tp1_lo, tp1_hi, n_samples)
    samples, stated, exact, infeasible = [], [], [], []
    for t in map(float, grid):
        try:
            d2 = second_derivative_terms(scenario, t).second_total
            e2 = cost_derivative(scenario, t, order=2)
        except EPQError:
            infeasible.append(t)
            continue
        samples.append(t)
        stated.append(d2)
        exact.append(e2)
    offending = [t for t, v in zip(samples, stated) if not v > 0]
    exact_offending = [t for t, v in zip(samples, exact) if not v > 0]
    p = scenario.process
    margin = feasibility_margin(p)
    pre = {
        "margin_nonnegative": margin >= 0,
        "P_minus_D_minus_lambda_positive": p.P - p.D - p.lam > 0,
        "P1_exceeds_lambda": p.P1 > p.lam,
    }
    return ConvexityReport(
        verdict=_verdict(len(samples), offending),
        exact_verdict=_verdict(len(samples), exact_offending),
        samples=samples,
        second_stated=stated,
        second_exact=exact,
        offending=offending,
        exact_offending=exact_offending,
        infeasible=infeasible,
        margin=margin,
        preconditions=pre,
        failed_precondition=not all(pre.values()),
    )
