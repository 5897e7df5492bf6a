"""Set covering games, utility design and best-response efficiency."""

from .dynamics import (
    EfficiencyReport,
    TiePolicy,
    Trajectory,
    best_responses,
    empirical_poa,
    empirical_pob,
    enumerate_end_states,
    is_nash,
    run_round,
)
from .game import (
    Resource,
    SetCoveringGame,
    UtilityRule,
    coverage_count,
    optimal_welfare,
    potential,
    utility,
    welfare,
)
from .rules import (
    FrontierPoint,
    ParetoParameter,
    frontier_point,
    frontier_sweep,
    mc_rule,
    pareto_rule,
    poa_optimal_rule,
    poa_value,
    poa_value_nonincreasing,
    pob_one_round,
)

__version__ = "0.1.0"
