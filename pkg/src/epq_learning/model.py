"""Scenario parameters, cycle geometry and feasibility gates.

Times are in years, rates in units/year. The run time ``tp1`` (production
time until the breakdown) is the single decision variable.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .errors import DomainError, InfeasibleError, InvalidRunTimeError
from .learning import coefficient_from_rate

B_MIN = 0.01
B_MAX = 0.99
# coefficients computed from alpha = 2**-b may miss the bounds by rounding
_B_SLACK = 1e-12


@dataclass(frozen=True)
class ProcessParams:
    P: float
    P1: float
    D: float
    x: float
    theta: float

    def __post_init__(self):
        for name in ("P", "P1", "D"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.x < 1.0:
            raise DomainError(f"defective fraction x must lie in [0, 1), got {self.x}")
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError(f"scrap fraction theta must lie in [0, 1], got {self.theta}")
        if not self.P > self.D:
            raise DomainError(f"production rate P={self.P} must exceed demand D={self.D}")
        lam = self.lam
        if not self.P - self.D - lam > 0:
            raise DomainError(f"P - D - lambda = {self.P - self.D - lam} must be positive")
        if not self.P1 > lam:
            raise DomainError(f"rework rate P1={self.P1} must exceed lambda={lam}")

    @property
    def lam(self) -> float:
        return self.P * self.x


@dataclass(frozen=True)
class CostParams:
    c: float
    cr: float
    cs: float
    h: float
    h1: float
    M: float
    K: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value >= 0:
                raise DomainError(f"cost {name} must be nonnegative, got {value}")
        if not self.h > 0:
            raise DomainError("holding cost h must be positive")


@dataclass(frozen=True)
class LearningCoefficients:
    bp1: float
    bp2: float
    bs: float


@dataclass(frozen=True)
class ScenarioParams:
    process: ProcessParams
    costs: CostParams
    alpha1: float
    alpha2: float
    alphas: float
    ts1: float
    b_min: float = B_MIN
    b_max: float = B_MAX
    coefficients: LearningCoefficients = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.b_min < self.b_max <= 1.0:
            raise DomainError(f"invalid coefficient bounds [{self.b_min}, {self.b_max}]")
        if not self.ts1 >= 0:
            raise DomainError(f"setup time ts1 must be nonnegative, got {self.ts1}")
        coeffs = {}
        for name, alpha in (("bp1", self.alpha1), ("bp2", self.alpha2), ("bs", self.alphas)):
            b = coefficient_from_rate(alpha)
            if not self.b_min - _B_SLACK <= b <= self.b_max + _B_SLACK:
                raise DomainError(
                    f"learning rate {alpha} gives {name}={b:.6g}, "
                    f"outside [{self.b_min}, {self.b_max}]"
                )
            coeffs[name] = b
        object.__setattr__(self, "coefficients", LearningCoefficients(**coeffs))

    @property
    def bp1(self) -> float:
        return self.coefficients.bp1

    @property
    def bp2(self) -> float:
        return self.coefficients.bp2

    @property
    def bs(self) -> float:
        return self.coefficients.bs

    def with_rates(self, alpha1, alpha2, alphas) -> "ScenarioParams":
        return replace(self, alpha1=alpha1, alpha2=alpha2, alphas=alphas)

    def boundary_flags(self, atol=1e-9) -> list[str]:
        """Names of coefficients sitting on the configured bounds."""
        flags = []
        for name in ("bp1", "bp2", "bs"):
            b = getattr(self, name)
            if abs(b - self.b_min) <= atol:
                flags.append(f"{name} at b_min")
            if abs(b - self.b_max) <= atol:
                flags.append(f"{name} at b_max")
        return flags

    def to_dict(self) -> dict:
        return {
            "process": asdict(self.process),
            "costs": asdict(self.costs),
            "learning": {
                "alpha1": self.alpha1,
                "alpha2": self.alpha2,
                "alphas": self.alphas,
                "b_min": self.b_min,
                "b_max": self.b_max,
            },
            "setup": {"ts1": self.ts1},
        }


@dataclass(frozen=True)
class DerivedQuantities:
    lam: float
    tp2: float
    ts2: float
    T: float
    td: float
    H1: float
    H2: float
    H3: float
    tp1_prime: float
    tp2_prime: float


def defective_rate(process: ProcessParams) -> float:
    return process.P * process.x


def feasibility_margin(process: ProcessParams) -> float:
    """Signed value of ``P(1 - theta x)/D - 1 - lambda(1 - theta)/P1``.

    The convexity argument needs it nonnegative; gating is left to callers.
    """
    p = process
    return p.P * (1 - p.theta * p.x) / p.D - 1 - defective_rate(p) * (1 - p.theta) / p.P1


def _check_tp1(tp1):
    if not tp1 > 0:
        raise InvalidRunTimeError(f"run time tp1 must be positive, got {tp1}")


def cycle_length(process: ProcessParams, tp1: float) -> float:
    _check_tp1(tp1)
    return process.P * tp1 * (1 - process.theta * process.x) / process.D


def rework_time(process: ProcessParams, tp1: float) -> float:
    _check_tp1(tp1)
    return defective_rate(process) * tp1 * (1 - process.theta) / process.P1


def rework_setup_time(ts1: float, bs: float) -> float:
    if not ts1 >= 0:
        raise DomainError(f"setup time must be nonnegative, got {ts1}")
    return ts1 * 2.0 ** -bs


def setup_times(scenario: ScenarioParams) -> tuple[float, float]:
    return scenario.ts1, rework_setup_time(scenario.ts1, scenario.bs)


def consumption_time(scenario: ScenarioParams, tp1: float, check: bool = True) -> float:
    """Time left to consume stock once rework ends; must be nonnegative."""
    ts1, ts2 = setup_times(scenario)
    td = cycle_length(scenario.process, tp1) - (ts1 + ts2) - (tp1 + rework_time(scenario.process, tp1))
    if check and td < 0:
        raise InfeasibleError(f"consumption time td={td:.6g} < 0 at tp1={tp1:.6g}")
    return td


def learning_root(base: float, b: float) -> float:
    """``base ** (1/(2-b))``: stock built during a learning-adjusted phase.

    Shared by the inventory levels and by the closed-form cost so the two
    cannot drift apart.
    """
    if base < 0:
        raise DomainError(f"negative radical base {base}")
    return base ** (1.0 / (2.0 - b))


def inventory_levels(scenario: ScenarioParams, tp1: float, check: bool = True) -> tuple[float, float, float]:
    """Return ``(H1, H2, H3)``: stock at breakdown, after rework, after repair."""
    _check_tp1(tp1)
    p = scenario.process
    ts2 = rework_setup_time(scenario.ts1, scenario.bs)
    tp2 = rework_time(p, tp1)
    H1 = learning_root(tp1 * (1 - scenario.bp1), scenario.bp1)
    H3 = H1 - p.D * ts2
    if check and H3 < 0:
        raise InfeasibleError(
            f"stock runs out during repair (H3={H3:.6g}) at tp1={tp1:.6g}"
        )
    H2 = H3 + learning_root(tp2 * (1 - scenario.bp2), scenario.bp2)
    return H1, H2, H3


def pre_learning_times(scenario: ScenarioParams, H1: float, H2: float, H3: float) -> tuple[float, float]:
    p = scenario.process
    d1 = p.P - p.D - defective_rate(p)
    d2 = p.P1 - p.D
    if d1 <= 0 or d2 <= 0:
        raise DomainError(f"non-positive denominator (P-D-lambda={d1}, P1-D={d2})")
    return H1 / d1, (H2 - H3) / d2


def rework_time_from_levels(scenario: ScenarioParams, H2: float, H3: float) -> float:
    """Rework time recovered from the stock gained during rework."""
    b = scenario.bp2
    return (H2 - H3) ** (2.0 - b) / (1.0 - b)


def derive(scenario: ScenarioParams, tp1: float, check: bool = True) -> DerivedQuantities:
    p = scenario.process
    td = consumption_time(scenario, tp1, check=check)
    H1, H2, H3 = inventory_levels(scenario, tp1, check=check)
    if p.P1 > p.D:
        tp1_prime, tp2_prime = pre_learning_times(scenario, H1, H2, H3)
    else:
        tp1_prime, tp2_prime = math.nan, math.nan
    return DerivedQuantities(
        lam=defective_rate(p),
        tp2=rework_time(p, tp1),
        ts2=rework_setup_time(scenario.ts1, scenario.bs),
        T=cycle_length(p, tp1),
        td=td,
        H1=H1,
        H2=H2,
        H3=H3,
        tp1_prime=tp1_prime,
        tp2_prime=tp2_prime,
    )


def feasible_lower_bound(scenario: ScenarioParams) -> float:
    """Smallest run time with ``td >= 0`` and ``H3 >= 0``.

    Both ``td`` and ``H3`` increase with tp1, so the feasible set is
    ``[bound, inf)``. Returns ``inf`` when no run time is feasible.
    """
    p = scenario.process
    ts1, ts2 = setup_times(scenario)
    slope = feasibility_margin(p)
    setup = ts1 + ts2
    if slope < 0 or (slope == 0 and setup > 0):
        return math.inf
    td_root = 0.0 if setup == 0 else setup / slope
    drawdown = p.D * ts2
    h3_root = drawdown ** (2.0 - scenario.bp1) / (1.0 - scenario.bp1)
    return max(td_root, h3_root)


def is_feasible(scenario: ScenarioParams, tp1: float) -> bool:
    try:
        derive(scenario, tp1)
    except InfeasibleError:
        return False
    return True
