"""EPQ model with scrap, rework, machine breakdown and learning effects."""

__version__ = "0.1.0"

from .cost import CostBreakdown, holding_cost_closed_form, holding_cost_quadrature, total_cost
from .errors import (
    DivergentIntegralError,
    DomainError,
    EPQError,
    InfeasibleError,
    NoFeasibleBracketError,
    QuadratureError,
    ScenarioError,
)
from .model import CostParams, DerivedQuantities, ProcessParams, ScenarioParams, derive
from .optimize import OptimizationResult, grid_oracle, minimize, sweep_learning_rates

__all__ = [
    "CostBreakdown",
    "CostParams",
    "DerivedQuantities",
    "DivergentIntegralError",
    "DomainError",
    "EPQError",
    "InfeasibleError",
    "NoFeasibleBracketError",
    "OptimizationResult",
    "ProcessParams",
    "QuadratureError",
    "ScenarioError",
    "ScenarioParams",
    "derive",
    "grid_oracle",
    "holding_cost_closed_form",
    "holding_cost_quadrature",
    "minimize",
    "sweep_learning_rates",
    "total_cost",
]
