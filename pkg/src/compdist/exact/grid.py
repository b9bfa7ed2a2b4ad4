"""Column-sweep DP over grid districtings whose districts are convex along rows and columns.

Every district meets each column in one vertical run (or not at all), and
once a district leaves a row it may never re-enter it further right. Together
with overlapping runs in consecutive columns, this is exactly the class of
connected districts that are contiguous in every row and every column.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Iterator

from ..districting import check_epsilon
from ..errors import StructuralError
from ..graph import CellGraph
from ..metrics import CompetitivenessModel, Swing
from .common import (Bounds, SolveResult, check_budget, competitive, make_witness, max_states,
                     sums_aggregate)

NEW = -1


def _compositions(m: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All splits of rows 0..m-1 into consecutive runs (top, bottom inclusive)."""
    for cuts in range(1 << (m - 1)):
        segs = []
        top = 0
        for r in range(m - 1):
            if cuts >> r & 1:
                segs.append((top, r))
                top = r + 1
        segs.append((top, m - 1))
        yield tuple(segs)


def _mask(top: int, bot: int) -> int:
    return ((1 << (bot - top + 1)) - 1) << top


def xconvex_filter(graph: CellGraph) -> Callable[[frozenset], bool]:
    """District predicate for the same plan class, for the brute-force oracle."""
    if graph.grid_shape is None:
        raise StructuralError("xconvex_filter needs a grid graph")
    _, cols = graph.grid_shape

    def contiguous(vals):
        vals = sorted(vals)
        return vals[-1] - vals[0] + 1 == len(vals)

    def ok(cells: frozenset) -> bool:
        rows: dict[int, list[int]] = {}
        columns: dict[int, list[int]] = {}
        for i in cells:
            r, c = divmod(i, cols)
            rows.setdefault(r, []).append(c)
            columns.setdefault(c, []).append(r)
        return all(contiguous(v) for v in rows.values()) and all(contiguous(v) for v in columns.values())

    return ok


def solve_xconvex_grid(graph: CellGraph, d: int, epsilon, model: CompetitivenessModel | None = None,
                       budget: int | None = None) -> SolveResult:
    """Best competitive count over row- and column-convex valid d-districtings.

    State after column i: the finished-district count plus, for each district
    still running, its run in column i, its forbidden rows and its running
    (pop, A, B, S) sums. States equal on that key are merged keeping the best
    count. Population bounds are checked whenever a district ends.
    """
    model = model or Swing()
    eps = check_epsilon(epsilon)
    if graph.grid_shape is None:
        raise StructuralError("solve_xconvex_grid needs a grid graph (grid_shape set)")
    m, ncols = graph.grid_shape
    if not 1 <= d <= graph.n:
        raise StructuralError(f"need 1 <= d <= n, got d={d}, n={graph.n}")
    limit = max_states() if budget is None else budget
    bounds = Bounds(graph, d, eps)
    cells = graph.cells

    def run_sums(col, top, bot):
        p = a = b = s = 0
        for r in range(top, bot + 1):
            c = cells[r * ncols + col]
            p += c.pop
            a += c.party_a
            b += c.party_b
            s += c.swing
        return p, a, b, s

    def close(entry):
        """Indicator for a finished district, or None when its population is out of band."""
        _, _, _, p, a, b, s = entry
        if not bounds.ok(p):
            return None
        return competitive(model, sums_aggregate(p, a, b, s))

    comps = list(_compositions(m))
    # layer: key -> (value, parent key, labels)
    layers: list[dict] = []
    layer: dict = {(0, ()): (0, None, None)}
    total_states = 0

    for col in range(ncols):
        nxt: dict = {}
        runs = {seg: run_sums(col, *seg) for segs in comps for seg in segs}
        for key, (value, _, _) in layer.items():
            finished, active = key
            for segs in comps:
                opts = []
                for top, bot in segs:
                    mk = _mask(top, bot)
                    o = [NEW]
                    for p_idx, (pt, pb, forb, *_rest) in enumerate(active):
                        if pt <= bot and top <= pb and not (mk & forb):
                            o.append(p_idx)
                    opts.append(o)
                for labels in product(*opts):
                    used = [x for x in labels if x != NEW]
                    if len(used) != len(set(used)):
                        continue
                    gained = 0
                    ok = True
                    for p_idx, entry in enumerate(active):
                        if p_idx not in used:
                            ind = close(entry)
                            if ind is None:
                                ok = False
                                break
                            gained += ind
                    if not ok:
                        continue
                    fin = finished + len(active) - len(used)
                    if fin + len(segs) > d:
                        continue
                    new_active = []
                    for (top, bot), lab in zip(segs, labels):
                        p, a, b, s = runs[(top, bot)]
                        if lab == NEW:
                            entry = (top, bot, 0, p, a, b, s)
                        else:
                            pt, pb, forb, p0, a0, b0, s0 = active[lab]
                            # rows the district held last column but not now are closed for good
                            forb |= _mask(pt, pb) & ~_mask(top, bot)
                            entry = (top, bot, forb, p0 + p, a0 + a, b0 + b, s0 + s)
                        if entry[3] > bounds.hi:
                            ok = False
                            break
                        new_active.append(entry)
                    if not ok:
                        continue
                    nkey = (fin, tuple(new_active))
                    nval = value + gained
                    old = nxt.get(nkey)
                    if old is None or nval > old[0]:
                        nxt[nkey] = (nval, key, (segs, labels))
        total_states += len(nxt)
        check_budget("max_states", limit, len(nxt))
        layers.append(nxt)
        layer = nxt

    best = None
    best_key = None
    for key, (value, _, _) in layer.items():
        finished, active = key
        if finished + len(active) != d:
            continue
        gained = 0
        for entry in active:
            ind = close(entry)
            if ind is None:
                break
            gained += ind
        else:
            if best is None or value + gained > best:
                best, best_key = value + gained, key
    explored = {"cells": graph.n, "states": total_states, "columns": ncols}
    if best is None:
        return SolveResult("xconvex", None, None, explored)

    # walk back for the per-column runs and labels, then replay forward
    steps = []
    key = best_key
    for col in range(ncols - 1, -1, -1):
        _, parent, info = layers[col][key]
        steps.append(info)
        key = parent
    steps.reverse()
    assignment = [-1] * graph.n
    ids: list[int] = []
    next_id = 0
    for col, (segs, labels) in enumerate(steps):
        new_ids = []
        for (top, bot), lab in zip(segs, labels):
            if lab == NEW:
                j = next_id
                next_id += 1
            else:
                j = ids[lab]
            new_ids.append(j)
            for r in range(top, bot + 1):
                assignment[r * ncols + col] = j
        ids = new_ids
    return SolveResult("xconvex", best, make_witness(graph, assignment, d, eps), explored)
