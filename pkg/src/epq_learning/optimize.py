"""Minimise the per-cycle cost over the run time."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .calculus import ConvexityReport, convexity_verdict, cost_derivative
from .cost import CostBreakdown, tc, total_cost
from .errors import EPQError, InfeasibleError, NoFeasibleBracketError
from .model import ScenarioParams, feasible_lower_bound

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_LO = 1e-3
# default upper end of the search, as a multiple of the lower end
DEFAULT_SPAN = 1e3
# nudge off the feasible boundary so td and H3 are not negative by round-off
_BOUNDARY_NUDGE = 1e-10
MULTISTART = 16
TIE_RTOL = 1e-12


@dataclass
class OptimizationResult:
    tp1_star: float
    tc_star: float
    breakdown: CostBreakdown
    iterations: int
    bracket: tuple[float, float]
    convexity: ConvexityReport | None
    method: str
    on_boundary: bool = False
    converged: bool = True
    stationarity: float = math.nan
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class GridResult:
    tp1_best: float
    tc_best: float
    n_infeasible: int
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def step_at(self, tp1: float) -> float:
        """Largest grid spacing adjacent to ``tp1``."""
        i = int(np.clip(np.searchsorted(self.grid, tp1), 1, len(self.grid) - 1))
        left = self.grid[i] - self.grid[i - 1]
        right = self.grid[min(i + 1, len(self.grid) - 1)] - self.grid[i]
        return float(max(left, right))


def feasible_bracket(scenario: ScenarioParams, bracket: Sequence[float] | None = None) -> tuple[float, float]:
    """Intersect ``bracket`` with the feasible run times ``[bound, inf)``."""
    bound = feasible_lower_bound(scenario)
    if math.isinf(bound):
        raise NoFeasibleBracketError("no run time satisfies td >= 0 and H3 >= 0")
    lo_feasible = bound * (1 + _BOUNDARY_NUDGE) if bound > 0 else 0.0
    if bracket is None:
        lo = max(DEFAULT_LO, lo_feasible)
        return lo, lo * DEFAULT_SPAN
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise NoFeasibleBracketError(f"invalid bracket ({lo}, {hi})")
    lo = max(lo, lo_feasible)
    if lo >= hi:
        raise NoFeasibleBracketError(
            f"bracket ({bracket[0]}, {bracket[1]}) lies below the feasible bound {bound:.6g}"
        )
    return lo, hi


def grid_oracle(scenario: ScenarioParams | None, bracket: Sequence[float], n_points: int = 10_000,
                objective: Callable[[float], float] | None = None) -> GridResult:
    """Brute-force minimum on a log-spaced grid; infeasible points are skipped."""
    if n_points < 100:
        raise ValueError("grid oracle needs at least 100 points")
    lo, hi = map(float, bracket)
    if objective is None:
        objective = lambda t: tc(scenario, t)  # noqa: E731
    grid = np.geomspace(lo, hi, n_points)
    values = np.full(n_points, np.inf)
    n_bad = 0
    for i, t in enumerate(grid):
        try:
            values[i] = objective(float(t))
        except InfeasibleError:
            n_bad += 1
    if n_bad == n_points:
        raise NoFeasibleBracketError(f"all {n_points} grid points infeasible on ({lo}, {hi})")
    i = int(np.argmin(values))  # first minimum, i.e. the smallest tp1 on ties
    return GridResult(float(grid[i]), float(values[i]), n_bad, grid, values)


def _local(f, lo, hi, tol, maxiter):
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": tol, "maxiter": maxiter})
    return float(res.x), float(res.fun), int(res.nfev), res.status == 0


def _better(candidate, incumbent):
    """Lower cost wins; near-ties go to the shorter run."""
    (t1, f1), (t0, f0) = candidate, incumbent
    if f1 < f0 - TIE_RTOL * abs(f0):
        return True
    return abs(f1 - f0) <= TIE_RTOL * abs(f0) and t1 < t0


def minimize(scenario: ScenarioParams, bracket: Sequence[float] | None = None,
             tol: float = DEFAULT_TOL, maxiter: int = 500,
             check_convexity: bool = True) -> OptimizationResult:
    """Bounded Brent search (golden section with parabolic steps) on the cost.

    Falls back to a grid-seeded multistart when the sampled second
    derivative of the implemented cost is not positive everywhere.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = feasible_bracket(scenario, bracket)
    f = lambda t: tc(scenario, t)  # noqa: E731
    convexity = convexity_verdict(scenario, lo, hi, 64) if check_convexity else None
    warnings = []
    if convexity is not None and convexity.exact_verdict == "NONCONVEX":
        warnings.append("cost not convex on the bracket; result from multistart")
        grid = grid_oracle(scenario, (lo, hi), 2000)
        order = np.argsort(grid.values, kind="stable")[:MULTISTART]
        best, nfev, converged = None, 0, True
        for i in sorted(order):
            a = float(grid.grid[max(i - 1, 0)])
            b = float(grid.grid[min(i + 1, len(grid.grid) - 1)])
            x, fx, n, ok = _local(f, a, b, tol, maxiter)
            nfev += n
            converged &= ok
            if best is None or _better((x, fx), best):
                best = (x, fx)
        x, fx = best
        method = "multistart-brent"
    else:
        x, fx, nfev, converged = _local(f, lo, hi, tol, maxiter)
        method = "brent-bounded"
    if not converged:
        warnings.append(f"iteration budget of {maxiter} exhausted before tol={tol:g}")
    on_boundary = False
    for edge in (lo, hi):
        f_edge = f(edge)
        if _better((edge, f_edge), (x, fx)) or abs(x - edge) <= tol:
            x, fx, on_boundary = edge, f_edge, True
    for w in warnings:
        log.warning(w)
    breakdown = total_cost(scenario, x)
    return OptimizationResult(
        tp1_star=x,
        tc_star=breakdown.total,
        breakdown=breakdown,
        iterations=nfev,
        bracket=(lo, hi),
        convexity=convexity,
        method=method,
        on_boundary=on_boundary,
        converged=converged,
        stationarity=cost_derivative(scenario, x),
        warnings=warnings,
    )


@dataclass
class SweepRow:
    alphas: tuple[float, float, float]
    coefficients: tuple[float, float, float] | None
    tp1_star: float
    tc_star: float
    feasible: bool
    convex: bool
    result: OptimizationResult | None = None
    error: str | None = None


@dataclass
class SweepResult:
    axis: list[tuple[float, float, float]]
    rows: list[SweepRow]

    @property
    def minima(self) -> list[tuple[float, float]]:
        return [(r.tp1_star, r.tc_star) for r in self.rows]


def sweep_learning_rates(template: ScenarioParams, alpha_grid: Sequence[Sequence[float]],
                         bracket: Sequence[float] | None = None,
                         tol: float = DEFAULT_TOL) -> SweepResult:
    """Optimise the run time for each learning-rate triple in turn.

    Per-row failures are recorded on the row and never abort the sweep.
    """
    axis = [tuple(float(a) for a in triple) for triple in alpha_grid]
    rows = []
    for triple in axis:
        try:
            scenario = template.with_rates(*triple)
            coeffs = (scenario.bp1, scenario.bp2, scenario.bs)
        except EPQError as exc:
            rows.append(SweepRow(triple, None, math.nan, math.nan, False, False, error=str(exc)))
            continue
        try:
            res = minimize(scenario, bracket, tol)
        except EPQError as exc:
            rows.append(SweepRow(triple, coeffs, math.nan, math.nan, False, False, error=str(exc)))
            continue
        rows.append(SweepRow(
            triple, coeffs, res.tp1_star, res.tc_star, True,
            res.convexity is not None and res.convexity.verdict == "CONVEX", res,
        ))
    return SweepResult(axis, rows)
