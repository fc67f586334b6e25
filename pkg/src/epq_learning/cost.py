"""Per-cycle production-inventory cost.

The holding cost is a sum of labelled terms. Each term exists in two forms:
``holding_terms_closed_form`` evaluates the stated antiderivatives, while
``integral_terms`` describes the same pieces as integrals of power-law
integrands so ``holding_cost_quadrature`` can evaluate them independently.

Term labels (unweighted; all but ``rework_stock`` carry weight ``h``):

==================  =====================================================
production_ramp     1/(P-D-lam) * int_0^tp1 t**(-1/bp1)
defective_build     1/lam * int_0^tp1 t**(1/(1-bp1))
repair_hold         H3 * ts2
repair_drawdown     1/D * int_0^{D ts2} t**(-1/(1-bs))
repair_defectives   ts2 * lam * tp1
rework_hold         H3 * tp2
rework_ramp         1/(P1-lam) * int_0^tp2 t**(-1/bp2)
depletion           H2 * td / 2
rework_stock        1/P1 * int_0^tp2 t**(-1/(1-bp2))   (weight h1)
==================  =====================================================
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .errors import InfeasibleError
from .model import (
    ScenarioParams,
    consumption_time,
    inventory_levels,
    rework_setup_time,
    rework_time,
)
from .quadrature import integrate_from_origin

MAIN_TERMS = (
    "production_ramp",
    "defective_build",
    "repair_hold",
    "repair_drawdown",
    "repair_defectives",
    "rework_hold",
    "rework_ramp",
    "depletion",
)
REWORK_TERMS = ("rework_stock",)
HOLDING_TERMS = MAIN_TERMS + REWORK_TERMS
INTEGRAL_TERMS = ("production_ramp", "defective_build", "repair_drawdown", "rework_ramp", "rework_stock")


@dataclass(frozen=True)
class CostBreakdown:
    pc: float
    bc: float
    rc: float
    sc: float
    hc_main: float
    hc_rework: float
    total: float
    # h- or h1-weighted holding terms
    terms: Mapping[str, float] = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {
            "pc": self.pc,
            "bc": self.bc,
            "rc": self.rc,
            "sc": self.sc,
            "hc_main": self.hc_main,
            "hc_rework": self.hc_rework,
            "total": self.total,
        }


def production_cost(scenario: ScenarioParams, tp1: float) -> float:
    return scenario.costs.c * scenario.process.P * tp1


def breakdown_setup_cost(scenario: ScenarioParams) -> float:
    return scenario.costs.K + scenario.costs.M


def rework_cost(scenario: ScenarioParams, tp1: float) -> float:
    p = scenario.process
    return scenario.costs.cr * p.P * tp1 * p.x * (1 - p.theta)


def scrap_cost(scenario: ScenarioParams, tp1: float) -> float:
    p = scenario.process
    return scenario.costs.cs * p.P * tp1 * p.x * p.theta


def _geometry(scenario, tp1, check):
    p = scenario.process
    ts2 = rework_setup_time(scenario.ts1, scenario.bs)
    tp2 = rework_time(p, tp1)
    td = consumption_time(scenario, tp1, check=check)
    H1, H2, H3 = inventory_levels(scenario, tp1, check=check)
    return ts2, tp2, td, H1, H2, H3


def _algebraic_terms(scenario, tp1, ts2, tp2, td, H2, H3, check):
    lam = scenario.process.lam
    depletion = 0.5 * H2 * td
    if check and depletion < 0:
        raise InfeasibleError(f"negative depletion holding {depletion:.6g} at tp1={tp1:.6g}")
    return {
        "repair_hold": H3 * ts2,
        "repair_defectives": ts2 * lam * tp1,
        "rework_hold": H3 * tp2,
        "depletion": depletion,
    }


def holding_terms_closed_form(scenario: ScenarioParams, tp1: float, check: bool = True,
                              perturb: Mapping[str, float] | None = None) -> dict[str, float]:
    """Unweighted holding terms from the stated antiderivatives.

    ``perturb`` maps a term label to a relative offset applied to that term;
    it exists for fault-injection checks of the validation report.
    """
    p = scenario.process
    b1, b2, bs = scenario.bp1, scenario.bp2, scenario.bs
    lam, D = p.lam, p.D
    ts2, tp2, td, H1, H2, H3 = _geometry(scenario, tp1, check)

    terms = {}
    terms["production_ramp"] = (
        1.0 / (p.P - D - lam) * b1 / (-1.0 + b1) * tp1 ** ((-1.0 + b1) / b1)
    )
    if lam > 0:
        terms["defective_build"] = (
            1.0 / lam * (1.0 - b1) / (2.0 - b1) * tp1 ** ((2.0 - b1) / (1.0 - b1))
        )
    else:
        terms["defective_build"] = 0.0
    drawdown = D * ts2
    if drawdown > 0:
        terms["repair_drawdown"] = 1.0 / D * (bs - 1.0) / bs * drawdown ** (bs / (bs - 1.0))
    else:
        terms["repair_drawdown"] = 0.0
    if tp2 > 0:
        terms["rework_ramp"] = (
            1.0 / (p.P1 - lam) * b2 / (1.0 - b2) * tp2 ** ((1.0 - b2) / b2)
        )
        terms["rework_stock"] = 1.0 / p.P1 * (b2 - 1.0) / b2 * tp2 ** (b2 / (b2 - 1.0))
    else:
        terms["rework_ramp"] = 0.0
        terms["rework_stock"] = 0.0
    terms.update(_algebraic_terms(scenario, tp1, ts2, tp2, td, H2, H3, check))
    if perturb:
        for label, eps in perturb.items():
            terms[label] = terms[label] * (1.0 + eps)
    return {label: terms[label] for label in HOLDING_TERMS}


@dataclass(frozen=True)
class IntegralTerm:
    """``scale * int_0^upper t**exponent dt``."""

    scale: float
    upper: float
    exponent: float

    def integrand(self, t):
        return t ** self.exponent


def integral_terms(scenario: ScenarioParams, tp1: float) -> dict[str, IntegralTerm]:
    p = scenario.process
    b1, b2, bs = scenario.bp1, scenario.bp2, scenario.bs
    lam = p.lam
    ts2 = rework_setup_time(scenario.ts1, bs)
    tp2 = rework_time(p, tp1)
    return {
        "production_ramp": IntegralTerm(1.0 / (p.P - p.D - lam), tp1, -1.0 / b1),
        # no defectives: the defective stock term vanishes instead of 1/0
        "defective_build": IntegralTerm(1.0 / lam if lam > 0 else 0.0, tp1, 1.0 / (1.0 - b1)),
        "repair_drawdown": IntegralTerm(1.0 / p.D, p.D * ts2, -1.0 / (1.0 - bs)),
        "rework_ramp": IntegralTerm(1.0 / (p.P1 - lam), tp2, -1.0 / b2),
        "rework_stock": IntegralTerm(1.0 / p.P1, tp2, -1.0 / (1.0 - b2)),
    }


@dataclass(frozen=True)
class TermEstimate:
    value: float
    divergent: bool = False


def holding_terms_quadrature(scenario: ScenarioParams, tp1: float, tol: float = 1e-10,
                             check: bool = True, finite_part: bool = False) -> dict[str, TermEstimate]:
    """Unweighted holding terms with every integral done numerically.

    Divergent integrals raise DivergentIntegralError unless ``finite_part``
    is set; then their Hadamard finite part is returned and flagged.
    """
    ts2, tp2, td, H1, H2, H3 = _geometry(scenario, tp1, check)
    out = {}
    for label, term in integral_terms(scenario, tp1).items():
        if term.scale == 0 or term.upper == 0:
            out[label] = TermEstimate(0.0)
            continue
        divergent = term.exponent <= -1.0
        value = integrate_from_origin(term.integrand, term.upper, term.exponent, rtol=tol,
                                      finite_part=finite_part, label=label)
        out[label] = TermEstimate(term.scale * value, divergent)
    for label, value in _algebraic_terms(scenario, tp1, ts2, tp2, td, H2, H3, check).items():
        out[label] = TermEstimate(value)
    return {label: out[label] for label in HOLDING_TERMS}


def _weigh(scenario, terms):
    h, h1 = scenario.costs.h, scenario.costs.h1
    main = {k: h * terms[k] for k in MAIN_TERMS}
    rework = {k: h1 * terms[k] for k in REWORK_TERMS}
    return sum(main.values()), sum(rework.values()), {**main, **rework}


def holding_cost_closed_form(scenario: ScenarioParams, tp1: float, check: bool = True,
                             perturb: Mapping[str, float] | None = None) -> tuple[float, float]:
    main, rework, _ = _weigh(scenario, holding_terms_closed_form(scenario, tp1, check, perturb))
    return main, rework


def holding_cost_quadrature(scenario: ScenarioParams, tp1: float, tol: float = 1e-10,
                            finite_part: bool = False) -> tuple[float, float]:
    estimates = holding_terms_quadrature(scenario, tp1, tol, finite_part=finite_part)
    main, rework, _ = _weigh(scenario, {k: v.value for k, v in estimates.items()})
    return main, rework


def total_cost(scenario: ScenarioParams, tp1: float, check: bool = True,
               perturb: Mapping[str, float] | None = None) -> CostBreakdown:
    pc = production_cost(scenario, tp1)
    bc = breakdown_setup_cost(scenario)
    rc = rework_cost(scenario, tp1)
    sc = scrap_cost(scenario, tp1)
    hc_main, hc_rework, weighted = _weigh(
        scenario, holding_terms_closed_form(scenario, tp1, check, perturb)
    )
    total = pc + bc + rc + sc + hc_main + hc_rework
    return CostBreakdown(pc, bc, rc, sc, hc_main, hc_rework, total, weighted)


def tc(scenario: ScenarioParams, tp1: float, check: bool = True) -> float:
    return total_cost(scenario, tp1, check).total


def linear_terms(scenario: ScenarioParams, tp1: float) -> dict[str, float]:
    """Non-holding cost components keyed by label."""
    return {
        "production": production_cost(scenario, tp1),
        "setup_breakdown": breakdown_setup_cost(scenario),
        "rework": rework_cost(scenario, tp1),
        "scrap": scrap_cost(scenario, tp1),
    }


def cost_terms(scenario: ScenarioParams, tp1: float, check: bool = False) -> dict[str, float]:
    """Every additive piece of the total cost, holding terms weighted."""
    out = linear_terms(scenario, tp1)
    out.update(total_cost(scenario, tp1, check).terms)
    return out

