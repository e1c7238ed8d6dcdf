"""Finite Bayesian games with heterogeneous beliefs: domination, surrogate games, equilibrium repair."""

from .dsl import PayoffSpec, parse_expr
from .equilibrium import regret_report, repair
from .game import (
    BeliefKernel,
    BehavioralStrategy,
    FiniteGame,
    State,
    StrategyProfile,
    validate_game,
)
from .measures import (
    ProductMeasure,
    canonical_dominating_measure,
    check_absolute_continuity,
    find_common_prior,
    rn_density,
)
from .solvers import SolveConfig, solve

__all__ = [
    "BeliefKernel",
    "BehavioralStrategy",
    "FiniteGame",
    "PayoffSpec",
    "ProductMeasure",
    "SolveConfig",
    "State",
    "StrategyProfile",
    "canonical_dominating_measure",
    "check_absolute_continuity",
    "find_common_prior",
    "parse_expr",
    "regret_report",
    "repair",
    "rn_density",
    "solve",
    "validate_game",
]
