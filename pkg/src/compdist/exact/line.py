"""Segment DP for districting a line of cells, O(n^2 d)."""

from __future__ import annotations

from itertools import accumulate

from ..districting import check_epsilon
from ..errors import StructuralError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel, Swing
from .common import Bounds, SolveResult, competitive, make_witness, sums_aggregate

NEG = None  # -infinity sentinel


def _gt(x, y) -> bool:
    if x is NEG:
        return False
    return y is NEG or x > y


def _prepare(graph: CellGraph, d: int, epsilon, model):
    eps = check_epsilon(epsilon)
    if not graph.is_path():
        raise StructuralError("solve_line needs a path graph with cells in index order")
    n = graph.n
    if not 1 <= d <= n:
        raise StructuralError(f"need 1 <= d <= n, got d={d}, n={n}")
    bounds = Bounds(graph, d, eps)
    cells = graph.cells
    P = [0, *accumulate(c.pop for c in cells)]
    A = [0, *accumulate(c.party_a for c in cells)]
    B = [0, *accumulate(c.party_b for c in cells)]
    S = [0, *accumulate(c.swing for c in cells)]
    cache: dict[tuple[int, int], int | None] = {}

    def seg(j, i):
        """Indicator for cells j..i-1, or None when the segment is infeasible."""
        key = (j, i)
        if key not in cache:
            pop = P[i] - P[j]
            if not bounds.ok(pop):
                cache[key] = None
            else:
                agg = sums_aggregate(pop, A[i] - A[j], B[i] - B[j], S[i] - S[j])
                cache[key] = competitive(model, agg)
        return cache[key]

    return eps, seg


def _prefix_table(seg, n: int, d: int):
    M = [[NEG] * (d + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        M[i][1] = seg(0, i)
    for k in range(2, d + 1):
        for i in range(k, n + 1):
            best = NEG
            for j in range(k - 1, i):
                if M[j][k - 1] is NEG:
                    continue
                ind = seg(j, i)
                if ind is None:
                    continue
                val = M[j][k - 1] + ind
                if _gt(val, best):
                    best = val
            M[i][k] = best
    return M


def line_table(graph: CellGraph, d: int, epsilon, model: CompetitivenessModel | None = None):
    """Prefix table M[i][k] (None for -infinity), rows 0..n and columns 0..d."""
    _, seg = _prepare(graph, d, epsilon, model or Swing())
    return _prefix_table(seg, graph.n, d)


def solve_line(graph: CellGraph, d: int, epsilon, model: CompetitivenessModel | None = None) -> SolveResult:
    """M(i, k) = best count for cells 0..i-1 split into k segments.

    M(i, k) = max over j < i with segment j..i-1 feasible of
    M(j, k-1) + [segment competitive]; M(i, 1) covers the prefix alone.
    """
    model = model or Swing()
    eps, seg = _prepare(graph, d, epsilon, model)
    n = graph.n
    M = _prefix_table(seg, n, d)
    answer = M[n][d]

    # suffix table drives a forward reconstruction, which yields the
    # lexicographically smallest assignment (earliest segments longest)
    R = [[NEG] * (d + 1) for _ in range(n + 1)]
    R[n][0] = 0
    for k in range(1, d + 1):
        for j in range(n - 1, -1, -1):
            best = NEG
            for e in range(j + 1, n + 1):
                if R[e][k - 1] is NEG:
                    continue
                ind = seg(j, e)
                if ind is None:
                    continue
                val = R[e][k - 1] + ind
                if _gt(val, best):
                    best = val
            R[j][k] = best
    if R[0][d] != answer:
        raise AssertionError("prefix and suffix tables disagree")

    explored = {"cells": n, "table_entries": n * d}
    if answer is NEG:
        return SolveResult("line", None, None, explored)
    assignment = []
    j, need = 0, answer
    for k in range(d, 0, -1):
        for e in range(n, j, -1):
            ind = seg(j, e)
            if ind is None or R[e][k - 1] is NEG:
                continue
            if ind + R[e][k - 1] == need:
                assignment.extend([d - k] * (e - j))
                need -= ind
                j = e
                break
    return SolveResult("line", answer, make_witness(graph, assignment, d, eps), explored)
