"""DP over a rooted tree when every district has bounded depth.

A district's depth is the largest distance from its top vertex (the member
closest to the root) to any other member. The tree is rooted at cell 0.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

from ..districting import check_epsilon
from ..errors import StructuralError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel, Swing
from .common import (Bounds, SolveResult, check_budget, competitive, make_witness, max_states,
                     sums_aggregate)


def root_tree(graph: CellGraph, root: int = 0):
    """(parent, children, depth, bfs order) of ``graph`` rooted at ``root``."""
    parent = [-1] * graph.n
    depth = [0] * graph.n
    children: list[list[int]] = [[] for _ in range(graph.n)]
    order = [root]
    seen = {root}
    q = deque([root])
    while q:
        u = q.popleft()
        for v in graph.neighbors[u]:
            if v not in seen:
                seen.add(v)
                parent[v] = u
                depth[v] = depth[u] + 1
                children[u].append(v)
                order.append(v)
                q.append(v)
    return parent, children, depth, order


def rooted_district_count(children, v: int, depth_bound: int) -> int:
    """How many connected sets contain v as top vertex and stay within depth_bound."""
    if depth_bound == 0:
        return 1
    total = 1
    for c in children[v]:
        total *= 1 + rooted_district_count(children, c, depth_bound - 1)
    return total


def tree_depth_filter(graph: CellGraph, depth_bound: int, root: int = 0) -> Callable[[frozenset], bool]:
    """District predicate for the bounded-depth plan class, for the brute-force oracle."""
    _, _, depth, _ = root_tree(graph, root)

    def ok(cells: frozenset) -> bool:
        ds = [depth[i] for i in cells]
        return max(ds) - min(ds) <= depth_bound

    return ok


def _districts_at(v, children, depth_bound, cells):
    """All rooted districts at v: (pop, a, b, s, members, roots) tuples."""

    def options(u, budget):
        c = cells[u]
        acc = [(c.pop, c.party_a, c.party_b, c.swing, (u,), ())]
        for ch in children[u]:
            if budget == 0:
                child_opts = []
            else:
                child_opts = options(ch, budget - 1)
            nxt = []
            for p, a, b, s, mem, roots in acc:
                nxt.append((p, a, b, s, mem, roots + (ch,)))  # ch starts its own subtree
                for p2, a2, b2, s2, mem2, roots2 in child_opts:
                    nxt.append((p + p2, a + a2, b + b2, s + s2, mem + mem2, roots + roots2))
            acc = nxt
        return acc

    return options(v, depth_bound)


def solve_tree(graph: CellGraph, d: int, epsilon, depth_bound: int,
               model: CompetitivenessModel | None = None, budget: int | None = None) -> SolveResult:
    """M(v, k) = max over rooted districts D at v, and splits l(u) >= 1 of k - 1
    over the subtree roots R(D) left below D, of [D competitive] + sum M(u, l(u)).

    The answer is M(root, d). ``budget`` caps the total number of rooted
    districts enumerated (default from COMPDIST_MAX_STATES).
    """
    model = model or Swing()
    eps = check_epsilon(epsilon)
    if not graph.is_tree():
        raise StructuralError("solve_tree needs a tree")
    if depth_bound < 0:
        raise StructuralError("depth_bound must be non-negative")
    if not 1 <= d <= graph.n:
        raise StructuralError(f"need 1 <= d <= n, got d={d}, n={graph.n}")
    _, children, _, order = root_tree(graph, 0)
    work = sum(rooted_district_count(children, v, depth_bound) for v in range(graph.n))
    check_budget("max_states", max_states() if budget is None else budget, work)

    bounds = Bounds(graph, d, eps)
    cells = graph.cells
    M: list[list] = [[None] * (d + 1) for _ in range(graph.n)]
    choice: dict[tuple[int, int], tuple] = {}
    enumerated = 0
    delta_max = graph.max_degree()

    for v in reversed(order):
        for p, a, b, s, members, roots in _districts_at(v, children, depth_bound, cells):
            enumerated += 1
            if not bounds.ok(p) or len(roots) > d - 1:
                continue
            ind = competitive(model, sums_aggregate(p, a, b, s))
            # max-plus convolution over the roots; g[t] = best with t districts below
            g: list = [0] + [None] * (d - 1)
            splits: list = [()] + [None] * (d - 1)
            for u in roots:
                h: list = [None] * d
                hs: list = [None] * d
                for t in range(d):
                    if g[t] is None:
                        continue
                    for ell in range(1, d - t):
                        m = M[u][ell]
                        if m is None:
                            continue
                        val = g[t] + m
                        if h[t + ell] is None or val > h[t + ell]:
                            h[t + ell] = val
                            hs[t + ell] = splits[t] + (ell,)
                g, splits = h, hs
            for k in range(1, d + 1):
                below = g[k - 1]
                if below is None:
                    continue
                val = ind + below
                if M[v][k] is None or val > M[v][k]:
                    M[v][k] = val
                    choice[(v, k)] = (members, roots, splits[k - 1])

    answer = M[0][d]
    explored = {"cells": graph.n, "rooted_districts": enumerated, "max_degree": delta_max,
                "depth_bound": depth_bound,
                "claim_bound": 2 ** (delta_max ** depth_bound) if delta_max ** depth_bound < 64 else None}
    if answer is None:
        return SolveResult("tree", None, None, explored)

    assignment = [-1] * graph.n
    label = 0
    stack = [(0, d)]
    while stack:
        v, k = stack.pop()
        members, roots, split = choice[(v, k)]
        for i in members:
            assignment[i] = label
        label += 1
        for u, ell in zip(reversed(roots), reversed(split)):
            stack.append((u, ell))
    return SolveResult("tree", answer, make_witness(graph, assignment, d, eps), explored)
