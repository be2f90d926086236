"""Solvers for adversarial randomized allocation games.

A defender randomizes an integral k x n asset-to-object allocation under
interval index-set constraints while an adversary attacks a weighted cell
subset.  The package provides the marginal relaxation LP, a dependent
rounding sampler with domain repair heuristics, exact baselines, the air
marshal and passenger screening encodings, seeded instance generators and
a benchmark CLI.
"""

from ara.core import (
    AdversaryType,
    AraGame,
    AssignmentConstraint,
    GameError,
    MarginalStrategy,
    MixedStrategyEstimate,
    PureStrategy,
    Target,
    check_implementability,
    coverage,
    defender_utility,
    game_value,
    is_valid_pure,
)
from ara.exact import EnumeratedStrategySet, enumerate_pure, exact_maximin
from ara.lp import LinearProgram, LpError, LpSolution, solve_lp
from ara.marginal import GameInfeasibleError, MarginalSolution, solve_marginal
from ara.sampling import (
    EqualityFixFailed,
    Pe0Form,
    Pe0StructureError,
    SamplingFailure,
    comb_sample,
    estimate_mixed,
    sample_pure,
    to_pe0,
)

__all__ = [
    "AdversaryType",
    "AraGame",
    "AssignmentConstraint",
    "EnumeratedStrategySet",
    "EqualityFixFailed",
    "GameError",
    "GameInfeasibleError",
    "LinearProgram",
    "LpError",
    "LpSolution",
    "MarginalSolution",
    "MarginalStrategy",
    "MixedStrategyEstimate",
    "Pe0Form",
    "Pe0StructureError",
    "PureStrategy",
    "SamplingFailure",
    "Target",
    "check_implementability",
    "comb_sample",
    "coverage",
    "defender_utility",
    "enumerate_pure",
    "estimate_mixed",
    "exact_maximin",
    "game_value",
    "is_valid_pure",
    "sample_pure",
    "solve_lp",
    "solve_marginal",
    "to_pe0",
]
