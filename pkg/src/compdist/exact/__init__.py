"""Exact and approximate solvers for special graph classes."""

from .brute import enumerate_plans, solve_brute_force
from .common import SolveResult, max_brute_cells, max_states
from .grid import solve_xconvex_grid, xconvex_filter
from .line import line_table, solve_line
from .mwis import (ConflictGraph, build_conflict_graph, exact_mwis, greedy_mwis, is_claw_free,
                   max_independent_neighbors, solve_mwis)
from .tree import rooted_district_count, solve_tree, tree_depth_filter

__all__ = [
    "SolveResult", "solve_brute_force", "enumerate_plans", "solve_line", "line_table",
    "solve_tree", "tree_depth_filter", "rooted_district_count", "solve_xconvex_grid",
    "xconvex_filter", "ConflictGraph", "build_conflict_graph", "solve_mwis", "greedy_mwis",
    "exact_mwis", "is_claw_free", "max_independent_neighbors", "max_brute_cells", "max_states",
]
