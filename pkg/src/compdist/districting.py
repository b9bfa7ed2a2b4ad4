"""Districting assignments, epsilon-validity, and single-node flips.

Per-district aggregates are kept in sync with the assignment incrementally.
Areas and perimeters are held as exact ``Fraction`` sums of the (float) cell
data, so a flip followed by its inverse restores them bit-for-bit.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InitializationError, InvalidFlipError, StructuralError
from .graph import CellGraph, as_fraction

MAX_EPSILON = Fraction(1, 6)


@dataclass
class DistrictAggregate:
    pop: int = 0
    party_a: int = 0
    party_b: int = 0
    swing: int = 0
    area: Fraction = Fraction(0)
    perimeter: Fraction = Fraction(0)
    size: int = 0

    def copy(self) -> DistrictAggregate:
        return copy.copy(self)


@dataclass(frozen=True)
class Violation:
    kind: str  # "C1" (contiguity), "C2" (population), or "empty"
    district: int
    message: str


def _exact_data(graph: CellGraph):
    cache = getattr(graph, "_exact_cache", None)
    if cache is None:
        areas = [Fraction(c.area) for c in graph.cells]
        ext = [Fraction(x) for x in graph.exterior_boundary]
        adj = [tuple((v, Fraction(length)) for v, length in a) for a in graph.adjacency]
        edge_len = [Fraction(length) for _, _, length in graph.edges]
        cache = (areas, ext, adj, edge_len)
        graph._exact_cache = cache
    return cache


def check_epsilon(epsilon) -> Fraction:
    eps = as_fraction(epsilon)
    if not (0 <= eps < MAX_EPSILON):
        raise StructuralError(f"epsilon must lie in [0, 1/6), got {eps}")
    return eps


def population_bounds(total_pop: int, d: int, epsilon) -> tuple[Fraction, Fraction]:
    """Inclusive bounds (1 - eps) * total / d and (1 + eps) * total / d."""
    eps = as_fraction(epsilon)
    ideal = Fraction(total_pop, d)
    return (1 - eps) * ideal, (1 + eps) * ideal


def compute_aggregates(graph: CellGraph, assignment: Sequence[int], d: int) -> list[DistrictAggregate]:
    """From-scratch per-district sums; the reference the incremental path must match."""
    areas, ext, _, edge_len = _exact_data(graph)
    aggs = [DistrictAggregate() for _ in range(d)]
    for i, cell in enumerate(graph.cells):
        g = aggs[assignment[i]]
        g.pop += cell.pop
        g.party_a += cell.party_a
        g.party_b += cell.party_b
        g.swing += cell.swing
        g.area += areas[i]
        g.perimeter += ext[i]
        g.size += 1
    for (u, v, _), length in zip(graph.edges, edge_len):
        du, dv = assignment[u], assignment[v]
        if du != dv:
            aggs[du].perimeter += length
            aggs[dv].perimeter += length
    return aggs


@dataclass
class Districting:
    """Assignment of every cell to one of ``d`` districts plus cached aggregates."""

    assignment: list[int]
    d: int
    epsilon: Fraction
    aggregates: list[DistrictAggregate] = field(repr=False)

    @classmethod
    def from_assignment(cls, graph: CellGraph, assignment: Sequence[int], d: int | None = None,
                        epsilon=Fraction(0)) -> Districting:
        assignment = [int(x) for x in assignment]
        if len(assignment) != graph.n:
            raise StructuralError(
                f"assignment has {len(assignment)} entries for {graph.n} cells"
            )
        if d is None:
            d = max(assignment) + 1
        if d < 1:
            raise StructuralError("need at least one district")
        if any(not 0 <= x < d for x in assignment):
            raise StructuralError(f"district labels must lie in [0, {d})")
        eps = check_epsilon(epsilon)
        return cls(assignment, d, eps, compute_aggregates(graph, assignment, d))

    def copy(self) -> Districting:
        return Districting(list(self.assignment), self.d, self.epsilon,
                           [a.copy() for a in self.aggregates])

    def members(self, district: int) -> list[int]:
        return [i for i, x in enumerate(self.assignment) if x == district]

    def canonical_assignment(self) -> tuple[int, ...]:
        """Labels renumbered in order of first appearance."""
        relabel: dict[int, int] = {}
        return tuple(relabel.setdefault(x, len(relabel)) for x in self.assignment)

    def is_coherent(self, graph: CellGraph) -> bool:
        return self.aggregates == compute_aggregates(graph, self.assignment, self.d)


def _check_sizes(districting: Districting, graph: CellGraph):
    if len(districting.assignment) != graph.n:
        raise StructuralError(
            f"assignment has {len(districting.assignment)} entries for {graph.n} cells"
        )
    if len(districting.aggregates) != districting.d:
        raise StructuralError("aggregate count does not match district count")
    for x in districting.assignment:
        if not 0 <= x < districting.d:
            raise StructuralError(f"district label {x} outside [0, {districting.d})")


def _is_connected_subset(graph: CellGraph, members: list[int]) -> bool:
    if not members:
        return True
    return len(graph.component_of(members[0], members)) == len(members)


def validate(districting: Districting, graph: CellGraph) -> list[Violation]:
    """All epsilon-validity violations; an empty list means the plan is valid."""
    _check_sizes(districting, graph)
    lo, hi = population_bounds(graph.total_pop, districting.d, districting.epsilon)
    groups: list[list[int]] = [[] for _ in range(districting.d)]
    for i, x in enumerate(districting.assignment):
        groups[x].append(i)
    report = []
    for j, members in enumerate(groups):
        if not members:
            report.append(Violation("empty", j, f"district {j} has no cells"))
            continue
        if not _is_connected_subset(graph, members):
            report.append(Violation("C1", j, f"district {j} is not contiguous"))
        pop = sum(graph.pop[i] for i in members)
        if not lo <= pop <= hi:
            report.append(Violation("C2", j, f"district {j} population {pop} outside [{lo}, {hi}]"))
    return report


def is_valid(districting: Districting, graph: CellGraph) -> bool:
    return not validate(districting, graph)


def _check_flip_args(districting: Districting, graph: CellGraph, cell: int, target: int):
    if not 0 <= cell < graph.n:
        raise StructuralError(f"cell index {cell} out of range")
    if not 0 <= target < districting.d:
        raise StructuralError(f"target district {target} out of range")
    if districting.assignment[cell] == target:
        raise StructuralError(f"cell {cell} is already in district {target}")


def is_flip_valid(districting: Districting, graph: CellGraph, cell: int, target: int) -> bool:
    """Whether moving ``cell`` into ``target`` keeps the plan epsilon-valid."""
    _check_flip_args(districting, graph, cell, target)
    assignment = districting.assignment
    source = assignment[cell]
    if not any(assignment[v] == target for v in graph.neighbors[cell]):
        return False
    src_agg = districting.aggregates[source]
    tgt_agg = districting.aggregates[target]
    if src_agg.size <= 1:
        return False
    lo, hi = population_bounds(graph.total_pop, districting.d, districting.epsilon)
    p = graph.pop[cell]
    if not (lo <= src_agg.pop - p and tgt_agg.pop + p <= hi):
        return False
    # local reachability inside the source district only
    same = [v for v in graph.neighbors[cell] if assignment[v] == source]
    if len(same) <= 1:
        return True
    seen = {same[0]}
    queue = deque([same[0]])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors[u]:
            if v != cell and v not in seen and assignment[v] == source:
                seen.add(v)
                queue.append(v)
    return len(seen) == src_agg.size - 1


def flip_deltas(districting: Districting, graph: CellGraph, cell: int, target: int):
    """Exact perimeter change of (source, target) if ``cell`` moved to ``target``."""
    _, ext, adj, _ = _exact_data(graph)
    assignment = districting.assignment
    source = assignment[cell]
    d_src = -ext[cell]
    d_tgt = ext[cell]
    for v, length in adj[cell]:
        dv = assignment[v]
        if dv == source:
            d_src += length
            d_tgt += length
        elif dv == target:
            d_src -= length
            d_tgt -= length
        else:
            d_src -= length
            d_tgt += length
    return d_src, d_tgt


def _apply_unchecked(districting: Districting, graph: CellGraph, cell: int, target: int):
    areas = _exact_data(graph)[0]
    source = districting.assignment[cell]
    d_src, d_tgt = flip_deltas(districting, graph, cell, target)
    c = graph.cells[cell]
    s = districting.aggregates[source]
    t = districting.aggregates[target]
    s.pop -= c.pop
    t.pop += c.pop
    s.party_a -= c.party_a
    t.party_a += c.party_a
    s.party_b -= c.party_b
    t.party_b += c.party_b
    s.swing -= c.swing
    t.swing += c.swing
    s.area -= areas[cell]
    t.area += areas[cell]
    s.perimeter += d_src
    t.perimeter += d_tgt
    s.size -= 1
    t.size += 1
    districting.assignment[cell] = target
    return districting


def apply_flip(districting: Districting, graph: CellGraph, cell: int, target: int) -> Districting:
    """Move ``cell`` to ``target`` in place (returns the same object).

    Raises InvalidFlipError and leaves the state untouched if the flip would
    break validity.
    """
    if not is_flip_valid(districting, graph, cell, target):
        raise InvalidFlipError(f"flip of cell {cell} to district {target} is not valid")
    return _apply_unchecked(districting, graph, cell, target)


def _keeps_connected(graph: CellGraph, cells: set[int], v: int) -> bool:
    """Whether ``cells - {v}`` stays connected, given ``cells`` is connected."""
    nbrs = [w for w in graph.neighbors[v] if w in cells]
    if len(nbrs) <= 1:
        return len(cells) > 1 or not nbrs
    goal = set(nbrs[1:])
    seen = {nbrs[0]}
    queue = deque([nbrs[0]])
    while queue and goal:
        u = queue.popleft()
        for w in graph.neighbors[u]:
            if w != v and w in cells and w not in seen:
                seen.add(w)
                goal.discard(w)
                queue.append(w)
    return not goal


def _grow_region(graph: CellGraph, remaining: set[int], assignment: list[int],
                 floor_: Fraction, cap: Fraction, rng) -> set[int] | None:
    """One connected region with population in [floor_, cap] whose removal
    leaves ``remaining`` connected, or None if growth got boxed in."""
    pop = graph.pop
    rem_order = sorted(remaining)
    # seed on the edge of what is already carved out, when possible
    touching = [u for u in rem_order
                if any(assignment[v] != -1 for v in graph.neighbors[u])
                or graph.exterior_boundary[u] > 0]
    pool = touching or rem_order
    seed = None
    for idx in rng.permutation(len(pool)):
        if _keeps_connected(graph, remaining, pool[idx]):
            seed = pool[idx]
            break
    if seed is None:
        return None
    region = {seed}
    rpop = pop[seed]
    target = floor_ + (cap - floor_) * Fraction(int(rng.integers(0, 1001)), 1000)
    frontier = {v for v in graph.neighbors[seed] if v in remaining}
    rest = remaining - region
    while rpop < target:
        cands = sorted(v for v in frontier if rpop + pop[v] <= cap)
        v = None
        while cands:
            weights = np.array(
                [1 + sum(1 for w in graph.neighbors[x] if w in region) for x in cands],
                dtype=float,
            )
            pick = int(rng.choice(len(cands), p=weights / weights.sum()))
            if _keeps_connected(graph, rest, cands[pick]):
                v = cands[pick]
                break
            cands.pop(pick)
        if v is None:
            break
        rest.discard(v)
        region.add(v)
        rpop += pop[v]
        frontier.discard(v)
        frontier.update(w for w in graph.neighbors[v] if w in remaining and w not in region)
    if not rest or not floor_ <= rpop <= cap:
        return None
    return region


def _tree_region(graph: CellGraph, remaining: set[int], floor_: Fraction, cap: Fraction,
                 rng, tries: int = 20) -> set[int] | None:
    """Cut a subtree with population in [floor_, cap] off a random spanning tree."""
    pop = graph.pop
    edges = [(u, v) for u, v, _ in graph.edges if u in remaining and v in remaining]
    nodes = sorted(remaining)
    for _ in range(tries):
        parent = {u: u for u in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tree: dict[int, list[int]] = {u: [] for u in nodes}
        for idx in rng.permutation(len(edges)):
            u, v = edges[idx]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                tree[u].append(v)
                tree[v].append(u)
        root = nodes[int(rng.integers(len(nodes)))]
        order = [root]
        up = {root: -1}
        for u in order:
            for v in tree[u]:
                if v not in up:
                    up[v] = u
                    order.append(v)
        sub = {u: pop[u] for u in nodes}
        for u in reversed(order[1:]):
            sub[up[u]] += sub[u]
        cuts = [u for u in order[1:] if floor_ <= sub[u] <= cap]
        if not cuts:
            continue
        top = cuts[int(rng.integers(len(cuts)))]
        region = {top}
        stack = [top]
        while stack:
            u = stack.pop()
            for v in tree[u]:
                if v != up[u] and v not in region:
                    region.add(v)
                    stack.append(v)
        return region
    return None


def _grow_plan(graph: CellGraph, d: int, lo: Fraction, hi: Fraction, rng,
               region_tries: int = 10) -> list[int] | None:
    pop = graph.pop
    assignment = [-1] * graph.n
    remaining = set(range(graph.n))
    for j in range(d - 1):
        k_after = d - j - 1
        # keep the remainder splittable into k_after districts
        rem_pop = sum(pop[u] for u in remaining)
        floor_ = max(lo, rem_pop - k_after * hi)
        cap = min(hi, rem_pop - k_after * lo)
        if floor_ > cap:
            return None
        for _ in range(region_tries):
            region = _grow_region(graph, remaining, assignment, floor_, cap, rng)
            if region is not None and len(remaining) - len(region) >= k_after:
                break
        else:
            region = _tree_region(graph, remaining, floor_, cap, rng)
            if region is None or len(remaining) - len(region) < k_after:
                return None
        for u in region:
            assignment[u] = j
        remaining -= region
    for u in remaining:
        assignment[u] = d - 1
    return assignment


def random_initial_districting(graph: CellGraph, d: int, epsilon, seed=None, rng=None,
                               max_retries: int = 100) -> Districting:
    """Random epsilon-valid plan by recursive region growing.

    Each attempt carves ``d - 1`` connected regions whose populations land in
    the band, leaving the connected remainder as the last district. Raises
    InitializationError after ``max_retries`` failed attempts.
    """
    if d < 1 or d > graph.n:
        raise StructuralError(f"cannot split {graph.n} cells into {d} districts")
    eps = check_epsilon(epsilon)
    if rng is None:
        rng = np.random.default_rng(seed)
    lo, hi = population_bounds(graph.total_pop, d, eps)
    for _ in range(max_retries):
        assignment = _grow_plan(graph, d, lo, hi, rng)
        if assignment is None:
            continue
        plan = Districting.from_assignment(graph, assignment, d, eps)
        if not validate(plan, graph):
            return plan
    raise InitializationError(
        f"no valid {d}-districting found in {max_retries} attempts (epsilon={eps})"
    )
