"""Exhaustive enumeration of epsilon-valid districtings: the oracle for every other solver."""

from __future__ import annotations

from typing import Callable, Iterator, Optional

from ..districting import check_epsilon
from ..errors import StructuralError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel, Swing
from .common import (Bounds, SolveResult, block_aggregate, check_budget, competitive,
                     make_witness, max_brute_cells)


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _MaskGraph:
    def __init__(self, graph: CellGraph):
        self.n = graph.n
        self.pop = list(graph.pop)
        self.nbr = [sum(1 << v for v in graph.neighbors[u]) for u in range(graph.n)]

    def pop_of(self, mask: int) -> int:
        return sum(self.pop[i] for i in _bits(mask))

    def components(self, mask: int) -> list[int]:
        comps = []
        while mask:
            comp = mask & -mask
            frontier = comp
            while frontier:
                grow = 0
                for i in _bits(frontier):
                    grow |= self.nbr[i]
                frontier = grow & mask & ~comp
                comp |= frontier
            comps.append(comp)
            mask &= ~comp
        return comps

    def connected(self, mask: int) -> bool:
        return mask != 0 and len(self.components(mask)) == 1

    def connected_subsets(self, root: int, allowed: int, hi: int,
                          max_size: Optional[int] = None) -> Iterator[tuple[int, int]]:
        """Every connected subset of ``allowed`` containing ``root`` with pop <= hi, once each."""
        pop, nbr = self.pop, self.nbr
        if pop[root] > hi:
            return
        start = 1 << root

        def grow(S, p, size, cand, excl):
            yield S, p
            if max_size is not None and size >= max_size:
                return
            while cand:
                u = cand & -cand
                cand ^= u
                excl |= u
                i = u.bit_length() - 1
                q = p + pop[i]
                if q > hi:
                    continue
                new = cand | (nbr[i] & allowed & ~excl & ~S)
                yield from grow(S | u, q, size + 1, new, excl)

        yield from grow(start, pop[root], 1, nbr[root] & allowed & ~start, start)


class _Stop(Exception):
    pass


def enumerate_plans(graph: CellGraph, d: int, epsilon,
                    district_filter: Callable[[frozenset], bool] | None = None,
                    max_cells: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every epsilon-valid d-districting as a canonical assignment tuple."""
    eps = check_epsilon(epsilon)
    if max_cells is None:
        max_cells = max_brute_cells()
    check_budget("max_brute_cells", max_cells, graph.n)
    mg = _MaskGraph(graph)
    bounds = Bounds(graph, d, eps)
    full = (1 << graph.n) - 1
    blocks: list[int] = []

    def accept(mask):
        return district_filter is None or district_filter(frozenset(_bits(mask)))

    def rec(remaining, k_left):
        if remaining == 0:
            if k_left == 0:
                assignment = [0] * graph.n
                for j, m in enumerate(blocks):
                    for i in _bits(m):
                        assignment[i] = j
                yield tuple(assignment)
            return
        if k_left == 0:
            return
        if k_left == 1:
            if mg.connected(remaining) and bounds.ok(mg.pop_of(remaining)) and accept(remaining):
                blocks.append(remaining)
                yield from rec(0, 0)
                blocks.pop()
            return
        root = (remaining & -remaining).bit_length() - 1
        for S, p in mg.connected_subsets(root, remaining, bounds.hi):
            if p < bounds.lo:
                continue
            rest = remaining & ~S
            if rest == 0:
                continue
            comps = mg.components(rest)
            if len(comps) > k_left - 1 or any(mg.pop_of(c) < bounds.lo for c in comps):
                continue
            if not accept(S):
                continue
            blocks.append(S)
            yield from rec(rest, k_left - 1)
            blocks.pop()

    if d < 1:
        raise StructuralError("need at least one district")
    yield from rec(full, d)


def solve_brute_force(graph: CellGraph, d: int, epsilon, model: CompetitivenessModel | None = None,
                      max_cells: int | None = None,
                      district_filter: Callable[[frozenset], bool] | None = None,
                      stop_at: int | None = None) -> SolveResult:
    """Maximum number of competitive districts over all epsilon-valid d-districtings.

    The witness is the lexicographically smallest canonical assignment among
    optimal plans. ``district_filter`` restricts the plan class (every district
    must pass it). ``stop_at`` ends the search as soon as that count is reached;
    the witness is then the first such plan found rather than the smallest.
    """
    model = model or Swing()
    best: Optional[int] = None
    best_plan: Optional[tuple[int, ...]] = None
    plans = 0
    cache: dict[frozenset, int] = {}

    def score(plan):
        groups: dict[int, list[int]] = {}
        for i, j in enumerate(plan):
            groups.setdefault(j, []).append(i)
        total = 0
        for cells in groups.values():
            key = frozenset(cells)
            hit = cache.get(key)
            if hit is None:
                hit = competitive(model, block_aggregate(graph, cells))
                cache[key] = hit
            total += hit
        return total

    try:
        for plan in enumerate_plans(graph, d, epsilon, district_filter, max_cells):
            plans += 1
            c = score(plan)
            if best is None or c > best or (c == best and plan < best_plan):
                best, best_plan = c, plan
            if stop_at is not None and best >= stop_at:
                raise _Stop
    except _Stop:
        pass
    witness = make_witness(graph, best_plan, d, epsilon) if best_plan is not None else None
    return SolveResult("brute", best, witness, {"cells": graph.n, "plans": plans,
                                                "stopped_early": stop_at is not None and best is not None and best >= stop_at})
