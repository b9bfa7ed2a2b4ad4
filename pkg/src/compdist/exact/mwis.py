"""Conflict-graph formulation when every district has exactly n/d cells.

Nodes are all connected cell sets of that size, edges join overlapping sets,
and a node weighs 1 when its district is competitive. Disjoint districts are
independent sets. We run a greedy independent set and, on small instances,
an exact branch-and-bound for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..districting import Districting, validate
from ..errors import StructuralError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel, Swing
from .brute import _MaskGraph, _bits
from .common import SolveResult, block_aggregate, check_budget, competitive, max_brute_cells, max_states


@dataclass
class ConflictGraph:
    graph: CellGraph
    d: int
    size: int
    nodes: list[frozenset]
    node_weight: list[int]
    edges: list[tuple[int, int]]
    adjacency: list[set[int]] = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.nodes)


def build_conflict_graph(graph: CellGraph, d: int, model: CompetitivenessModel | None = None,
                         budget: int | None = None) -> ConflictGraph:
    model = model or Swing()
    n = graph.n
    if d < 1 or n % d:
        raise StructuralError(f"cell count {n} is not divisible by d={d}")
    size = n // d
    limit = max_states() if budget is None else budget
    mg = _MaskGraph(graph)
    huge = 1 << 62
    masks = []
    full = (1 << n) - 1
    for root in range(n):
        # sets are generated once each by their smallest cell
        allowed = full & ~((1 << root) - 1)
        for S, _ in mg.connected_subsets(root, allowed, huge, max_size=size):
            if S.bit_count() == size:
                masks.append(S)
                check_budget("max_states", limit, len(masks))
    masks.sort(key=lambda S: sorted(_bits(S)))
    nodes = [frozenset(_bits(S)) for S in masks]
    weights = [competitive(model, block_aggregate(graph, sorted(c))) for c in nodes]
    by_cell: list[list[int]] = [[] for _ in range(n)]
    for idx, c in enumerate(nodes):
        for i in c:
            by_cell[i].append(idx)
    adjacency: list[set[int]] = [set() for _ in nodes]
    for group in by_cell:
        for x in group:
            adjacency[x].update(group)
    for x, nb in enumerate(adjacency):
        nb.discard(x)
    edges = sorted((x, y) for x, nb in enumerate(adjacency) for y in nb if x < y)
    return ConflictGraph(graph, d, size, nodes, weights, edges, adjacency)


def _max_independent(adjacency: list[set[int]], candidates: list[int]) -> int:
    """Size of a largest independent set among ``candidates`` (exhaustive)."""
    best = 0

    def rec(avail: list[int], count: int):
        nonlocal best
        if count + len(avail) <= best:
            return
        if not avail:
            best = max(best, count)
            return
        v, rest = avail[0], avail[1:]
        rec([u for u in rest if u not in adjacency[v]], count + 1)
        rec(rest, count)

    rec(list(candidates), 0)
    return best


def max_independent_neighbors(cg: ConflictGraph, node: int) -> int:
    return _max_independent(cg.adjacency, sorted(cg.adjacency[node]))


def is_claw_free(cg: ConflictGraph, k: int | None = None) -> bool:
    """True when no node has ``k`` pairwise non-overlapping neighbours (default n/d + 1)."""
    k = cg.size + 1 if k is None else k
    return all(max_independent_neighbors(cg, v) < k for v in range(cg.node_count))


def greedy_mwis(cg: ConflictGraph) -> list[int]:
    """Highest weight first, then fewest conflicts, then index; the result is maximal."""
    order = sorted(range(cg.node_count), key=lambda v: (-cg.node_weight[v], len(cg.adjacency[v]), v))
    chosen: list[int] = []
    blocked: set[int] = set()
    for v in order:
        if v in blocked:
            continue
        chosen.append(v)
        blocked.add(v)
        blocked.update(cg.adjacency[v])
    return sorted(chosen)


def exact_mwis(cg: ConflictGraph) -> tuple[int, list[int]]:
    """Branch and bound; weights are 0/1 so only weight-1 nodes matter."""
    heavy = [v for v in range(cg.node_count) if cg.node_weight[v] > 0]
    best_val = 0
    best_set: list[int] = []

    def rec(avail: list[int], chosen: list[int]):
        nonlocal best_val, best_set
        if len(chosen) > best_val:
            best_val, best_set = len(chosen), list(chosen)
        if not avail or len(chosen) + len(avail) <= best_val:
            return
        v, rest = avail[0], avail[1:]
        chosen.append(v)
        rec([u for u in rest if u not in cg.adjacency[v]], chosen)
        chosen.pop()
        rec(rest, chosen)

    rec(heavy, [])
    return best_val, sorted(best_set)


def solve_mwis(cg: ConflictGraph, epsilon=Fraction(0), exact_cells: int | None = None) -> SolveResult:
    """Greedy count as ``best_count``; exact optimum in ``explored`` on small instances.

    A witness is attached only when the greedy set covers every cell and the
    resulting plan passes ``validate`` at ``epsilon``.
    """
    chosen = greedy_mwis(cg)
    value = sum(cg.node_weight[v] for v in chosen)
    explored: dict = {
        "candidates": cg.node_count,
        "conflict_edges": len(cg.edges),
        "greedy_size": len(chosen),
        "greedy_nodes": chosen,
        "exact": None,
    }
    cap = max_brute_cells() if exact_cells is None else exact_cells
    if cg.graph.n <= cap:
        exact_val, exact_set = exact_mwis(cg)
        explored["exact"] = exact_val
        explored["exact_nodes"] = exact_set
    witness: Optional[Districting] = None
    covered = sorted(i for v in chosen for i in cg.nodes[v])
    if covered == list(range(cg.graph.n)):
        assignment = [0] * cg.graph.n
        for j, v in enumerate(chosen):
            for i in cg.nodes[v]:
                assignment[i] = j
        plan = Districting.from_assignment(cg.graph, assignment, len(chosen), epsilon)
        if not validate(plan, cg.graph):
            witness = plan
    return SolveResult("mwis", value, witness, explored)
