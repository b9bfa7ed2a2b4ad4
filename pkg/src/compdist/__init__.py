"""Competitive districting on cell-adjacency graphs.

Validity checking and single-node flips, competitiveness metrics, a weighted
hill-climbing optimizer, exact solvers for special graph classes, reduction
instance generators, and graph/report I/O.
"""

__version__ = "0.1.0"

from .districting import (DistrictAggregate, Districting, Violation, apply_flip, compute_aggregates,
                          is_flip_valid, is_valid, population_bounds, random_initial_districting,
                          validate)
from .errors import (BudgetExceededError, CompdistError, DanglingEdgeError, DegenerateInstanceError,
                     GraphFormatError, InitializationError, InvalidFlipError,
                     ReductionMismatchError, StructuralError, UndefinedCompetitivenessError)
from .graph import Cell, CellGraph, grid_graph, path_graph
from .metrics import (ScoreWeights, Swing, VoteBand, count_competitive, is_swing,
                      is_vbc_competitive, iso_score, parse_model, plan_summary, swing_score,
                      vbc_score)
from .optimizer import (ChainConfig, FlipCandidate, compact_sample_config, enumerate_flips,
                        flip_weight, reference_config, run_chain, run_chains, step)

__all__ = [
    "Cell", "CellGraph", "grid_graph", "path_graph",
    "DistrictAggregate", "Districting", "Violation", "validate", "is_valid", "is_flip_valid",
    "apply_flip", "compute_aggregates", "population_bounds", "random_initial_districting",
    "VoteBand", "Swing", "ScoreWeights", "parse_model", "is_vbc_competitive", "is_swing",
    "count_competitive", "iso_score", "vbc_score", "swing_score", "plan_summary",
    "ChainConfig", "FlipCandidate", "reference_config", "compact_sample_config", "enumerate_flips",
    "flip_weight", "step", "run_chain", "run_chains",
    "CompdistError", "StructuralError", "InvalidFlipError", "InitializationError",
    "UndefinedCompetitivenessError", "BudgetExceededError", "DegenerateInstanceError",
    "ReductionMismatchError", "GraphFormatError", "DanglingEdgeError",
]
