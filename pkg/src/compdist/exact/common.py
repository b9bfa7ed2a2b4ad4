"""Shared result type, work budgets and small helpers for the exact solvers."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..districting import DistrictAggregate, Districting, population_bounds
from ..errors import BudgetExceededError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel

DEFAULT_MAX_BRUTE_CELLS = 14
DEFAULT_MAX_STATES = 2_000_000


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def max_brute_cells() -> int:
    return _env_int("COMPDIST_MAX_BRUTE_CELLS", DEFAULT_MAX_BRUTE_CELLS)


def max_states() -> int:
    return _env_int("COMPDIST_MAX_STATES", DEFAULT_MAX_STATES)


def check_budget(name: str, limit: int, requested) -> None:
    if requested > limit:
        raise BudgetExceededError(
            f"{name}: instance needs {requested} but the budget is {limit}", name, limit, requested
        )


@dataclass
class SolveResult:
    """Outcome of an exact (or approximate) solve.

    ``best_count`` is None when no valid districting exists in the solver's
    plan class.
    """

    solver: str
    best_count: Optional[int]
    witness: Optional[Districting] = None
    explored: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.best_count is not None

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "best_count": self.best_count,
            "feasible": self.feasible,
            "witness": list(self.witness.assignment) if self.witness is not None else None,
            "explored": self.explored,
        }


class Bounds:
    """Integer population window for a d-districting of ``graph``."""

    def __init__(self, graph: CellGraph, d: int, epsilon):
        lo, hi = population_bounds(graph.total_pop, d, epsilon)
        self.lo = math.ceil(lo)
        self.hi = math.floor(hi)
        self.exact = (lo, hi)

    def ok(self, pop: int) -> bool:
        return self.lo <= pop <= self.hi


def block_aggregate(graph: CellGraph, cells) -> DistrictAggregate:
    """Vote sums only; area and perimeter are left at zero."""
    agg = DistrictAggregate()
    for i in cells:
        c = graph.cells[i]
        agg.pop += c.pop
        agg.party_a += c.party_a
        agg.party_b += c.party_b
        agg.swing += c.swing
        agg.size += 1
    return agg


def sums_aggregate(pop: int, a: int, b: int, s: int) -> DistrictAggregate:
    return DistrictAggregate(pop=pop, party_a=a, party_b=b, swing=s)


def competitive(model: CompetitivenessModel, agg: DistrictAggregate) -> int:
    return 1 if model.is_competitive(agg) else 0


def canonical(assignment) -> tuple[int, ...]:
    relabel: dict[int, int] = {}
    return tuple(relabel.setdefault(x, len(relabel)) for x in assignment)


def make_witness(graph: CellGraph, assignment, d: int, epsilon) -> Districting:
    return Districting.from_assignment(graph, canonical(assignment), d, Fraction(epsilon))
