"""Randomized weighted hill climbing over single-node flips.

Each step enumerates every valid flip, weights each by
``exp(-sum_i w_i * dJ_i)`` over the active score terms, samples one flip
proportionally and applies it. Chains restart from a fresh random plan every
``restart_every`` steps; the best plan (most competitive districts, then
lowest total isoperimetric score) is kept across restarts.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .districting import (
    Districting,
    _apply_unchecked,
    check_epsilon,
    population_bounds,
    random_initial_districting,
)
from .errors import InitializationError, StructuralError
from .graph import CellGraph
from .metrics import (
    CompetitivenessModel,
    ScoreWeights,
    Swing,
    VoteBand,
    _swing_from_counts,
    _vbc_from_counts,
    count_competitive,
    total_iso,
)

log = logging.getLogger(__name__)

EXPONENT_CLAMP = 700.0


@dataclass(frozen=True)
class ChainConfig:
    districts: int
    total_steps: int = 36_000
    restart_every: int = 3_000
    weights: ScoreWeights = field(default_factory=lambda: ScoreWeights(3.0, 1e5, 0.0))
    model: CompetitivenessModel = field(default_factory=VoteBand)
    seed: int = 0
    epsilon: Fraction = Fraction(1, 20)
    trace_path: Optional[str] = None
    init_retries: int = 100

    def __post_init__(self):
        if self.total_steps < 0 or self.restart_every < 1:
            raise StructuralError("need total_steps >= 0 and restart_every >= 1")
        if self.total_steps and self.total_steps < self.restart_every:
            raise StructuralError("total_steps must be >= restart_every")
        if self.districts < 1:
            raise StructuralError("need at least one district")
        object.__setattr__(self, "epsilon", check_epsilon(self.epsilon))

    @property
    def compact_only(self) -> bool:
        return self.weights.w_vbc == 0 and self.weights.w_sw == 0


def reference_config(districts: int, model: CompetitivenessModel, **overrides) -> ChainConfig:
    """36,000 steps, restart every 3,000, w_iso = 3, competitiveness weight 1e5."""
    delta = model.delta if isinstance(model, VoteBand) else VoteBand().delta
    if isinstance(model, Swing):
        weights = ScoreWeights(3.0, 0.0, 1e5, delta)
    else:
        weights = ScoreWeights(3.0, 1e5, 0.0, delta)
    return ChainConfig(districts=districts, weights=weights, model=model, **overrides)


def compact_sample_config(districts: int, model: CompetitivenessModel | None = None,
                          **overrides) -> ChainConfig:
    """Compactness-only baseline: 40,000 steps, restart every 200."""
    params = dict(total_steps=40_000, restart_every=200)
    params.update(overrides)
    return ChainConfig(districts=districts, weights=ScoreWeights(3.0, 0.0, 0.0),
                       model=model or VoteBand(), **params)


@dataclass
class FlipCandidate:
    cell: int
    source: int
    target: int
    weight: Optional[float] = None
    log_weight: Optional[float] = field(default=None, repr=False)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.cell, self.source, self.target)


def _articulation_points(graph: CellGraph, members: set[int]) -> set[int]:
    """Cut vertices of the subgraph induced by ``members`` (iterative Tarjan)."""
    cut: set[int] = set()
    if len(members) <= 2:
        return cut
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    timer = 0
    nbrs = graph.neighbors
    for root in sorted(members):
        if root in disc:
            continue
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack = [(root, -1, iter(nbrs[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if v not in members:
                    continue
                if v not in disc:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, u, iter(nbrs[v])))
                    advanced = True
                    break
                if v != parent and disc[v] < low[u]:
                    low[u] = disc[v]
            if advanced:
                continue
            stack.pop()
            if parent != -1:
                if low[u] < low[parent]:
                    low[parent] = low[u]
                if parent == root:
                    root_children += 1
                elif low[u] >= disc[parent]:
                    cut.add(parent)
        if root_children > 1:
            cut.add(root)
    return cut


class FlipEngine:
    """Candidate enumeration and weighting with per-district caches.

    Cut-vertex sets are cached per district and invalidated only for the two
    districts a flip touches.
    """

    def __init__(self, graph: CellGraph, plan: Districting):
        self.graph = graph
        self.plan = plan
        lo, hi = population_bounds(graph.total_pop, plan.d, plan.epsilon)
        self.lo = math.ceil(lo)
        self.hi = math.floor(hi)
        self.members = [set() for _ in range(plan.d)]
        for i, x in enumerate(plan.assignment):
            self.members[x].add(i)
        self._cut: list[Optional[set[int]]] = [None] * plan.d
        self.boundary = {u for u in range(graph.n) if self._on_boundary(u)}
        self.areas = [c.area for c in graph.cells]

    def _on_boundary(self, u: int) -> bool:
        a = self.plan.assignment
        return any(a[v] != a[u] for v in self.graph.neighbors[u])

    def cut_vertices(self, j: int) -> set[int]:
        if self._cut[j] is None:
            self._cut[j] = _articulation_points(self.graph, self.members[j])
        return self._cut[j]

    def candidates(self) -> list[FlipCandidate]:
        plan, graph = self.plan, self.graph
        a = plan.assignment
        aggs = plan.aggregates
        out = []
        for u in sorted(self.boundary):
            src = a[u]
            s = aggs[src]
            p = graph.pop[u]
            if s.size <= 1 or s.pop - p < self.lo:
                continue
            targets = sorted({a[v] for v in graph.neighbors[u]} - {src})
            targets = [t for t in targets if aggs[t].pop + p <= self.hi]
            if not targets or u in self.cut_vertices(src):
                continue
            out.extend(FlipCandidate(u, src, t) for t in targets)
        return out

    def exponent(self, cand: FlipCandidate, weights: ScoreWeights) -> float:
        """-sum_i w_i * dJ_i for the flip, before clamping."""
        plan, graph = self.plan, self.graph
        u, src, tgt = cand.cell, cand.source, cand.target
        s, t = plan.aggregates[src], plan.aggregates[tgt]
        c = graph.cells[u]
        total = 0.0
        if weights.w_iso:
            a = plan.assignment
            d_src = -graph.exterior_boundary[u]
            d_tgt = graph.exterior_boundary[u]
            for v, length in graph.adjacency[u]:
                dv = a[v]
                if dv == src:
                    d_src += length
                    d_tgt += length
                elif dv == tgt:
                    d_src -= length
                    d_tgt -= length
                else:
                    d_src -= length
                    d_tgt += length
            ps, pt = float(s.perimeter), float(t.perimeter)
            as_, at = float(s.area), float(t.area)
            area_u = self.areas[u]
            d_iso = ((ps + d_src) ** 2 / (as_ - area_u) + (pt + d_tgt) ** 2 / (at + area_u)
                     - ps * ps / as_ - pt * pt / at)
            total -= weights.w_iso * d_iso
        if weights.w_vbc:
            delta = float(weights.delta)
            d_vbc = (_vbc_from_counts(s.party_a - c.party_a, s.pop - c.pop, delta)
                     + _vbc_from_counts(t.party_a + c.party_a, t.pop + c.pop, delta)
                     - _vbc_from_counts(s.party_a, s.pop, delta)
                     - _vbc_from_counts(t.party_a, t.pop, delta))
            total -= weights.w_vbc * d_vbc
        if weights.w_sw:
            d_sw = (_swing_from_counts(s.party_a - c.party_a, s.party_b - c.party_b,
                                       s.swing - c.swing, s.pop - c.pop)
                    + _swing_from_counts(t.party_a + c.party_a, t.party_b + c.party_b,
                                         t.swing + c.swing, t.pop + c.pop)
                    - _swing_from_counts(s.party_a, s.party_b, s.swing, s.pop)
                    - _swing_from_counts(t.party_a, t.party_b, t.swing, t.pop))
            total -= weights.w_sw * d_sw
        return total

    def weigh(self, cands: list[FlipCandidate], weights: ScoreWeights) -> None:
        for cand in cands:
            e = min(max(self.exponent(cand, weights), -EXPONENT_CLAMP), EXPONENT_CLAMP)
            cand.log_weight = e
            cand.weight = math.exp(e)

    def apply(self, cand: FlipCandidate) -> None:
        u, src, tgt = cand.cell, cand.source, cand.target
        _apply_unchecked(self.plan, self.graph, u, tgt)
        self.members[src].discard(u)
        self.members[tgt].add(u)
        self._cut[src] = None
        self._cut[tgt] = None
        for w in (u, *self.graph.neighbors[u]):
            if self._on_boundary(w):
                self.boundary.add(w)
            else:
                self.boundary.discard(w)


def enumerate_flips(districting: Districting, graph: CellGraph) -> list[FlipCandidate]:
    """Every valid (cell, source, target) flip, ordered by cell then target."""
    return FlipEngine(graph, districting).candidates()


def flip_weight(districting: Districting, graph: CellGraph, candidate: FlipCandidate,
                weights: ScoreWeights, model: CompetitivenessModel | None = None) -> float:
    """exp(-sum_i w_i dJ_i) with the exponent clamped to +-700.

    ``model`` is accepted for interface symmetry; the active terms follow the
    weights (iso always, VBC / swing when their weight is positive).
    """
    e = FlipEngine(graph, districting).exponent(candidate, weights)
    return math.exp(min(max(e, -EXPONENT_CLAMP), EXPONENT_CLAMP))


def _sample(cands: list[FlipCandidate], rng) -> FlipCandidate:
    top = max(c.log_weight for c in cands)
    cum = []
    acc = 0.0
    for c in cands:
        acc += math.exp(c.log_weight - top)
        cum.append(acc)
    r = rng.random() * acc
    return cands[min(bisect.bisect_right(cum, r), len(cands) - 1)]


def _step(engine: FlipEngine, weights: ScoreWeights, rng) -> Optional[FlipCandidate]:
    cands = engine.candidates()
    if not cands:
        return None
    engine.weigh(cands, weights)
    chosen = _sample(cands, rng)
    engine.apply(chosen)
    return chosen


def step(districting: Districting, graph: CellGraph, config: ChainConfig, rng):
    """One weighted flip, applied in place. Returns (plan, chosen or None)."""
    engine = FlipEngine(graph, districting)
    return districting, _step(engine, config.weights, rng)


@dataclass
class TraceRecord:
    step: int
    flip: Optional[tuple[int, int, int]]
    competitive: int
    total_iso: float
    restart: bool = False

    def to_dict(self):
        return {"step": self.step, "flip": list(self.flip) if self.flip else None,
                "competitive": self.competitive, "total_iso": self.total_iso,
                "restart": self.restart}


@dataclass
class IntervalBest:
    interval: int
    step: int
    competitive: int
    total_iso: float
    assignment: list[int] = field(repr=False)


@dataclass
class BestPlanRecord:
    plan: Districting
    step: int
    competitive: int
    total_iso: float
    trace: list[TraceRecord]
    interval_bests: list[IntervalBest]
    events: list[dict] = field(default_factory=list)
    chain: int = 0

    @property
    def key(self):
        return (-self.competitive, self.total_iso)


def _better(count: int, iso: float, best_count: int, best_iso: float) -> bool:
    return count > best_count or (count == best_count and iso < best_iso)


def run_chain(graph: CellGraph, config: ChainConfig, seed=None) -> BestPlanRecord:
    """Run one chain. ``seed`` (int or SeedSequence) overrides ``config.seed``."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    weights, model = config.weights, config.model

    def fresh():
        return random_initial_districting(graph, config.districts, config.epsilon, rng=rng,
                                          max_retries=config.init_retries)

    plan = fresh()
    engine = FlipEngine(graph, plan)
    count, iso = count_competitive(plan, model), total_iso(plan)
    trace = [TraceRecord(0, None, count, iso, restart=True)]
    best = (count, iso, 0, list(plan.assignment))
    interval = 0
    intervals: list[IntervalBest] = []

    def interval_key(c, i):
        return (0, i) if config.compact_only else (-c, i)

    cur_int = IntervalBest(0, 0, count, iso, list(plan.assignment))
    events: list[dict] = []
    force_restart = False

    for s in range(1, config.total_steps + 1):
        restarted = False
        if force_restart or (s - 1) % config.restart_every == 0 and s > 1:
            try:
                plan = fresh()
                engine = FlipEngine(graph, plan)
                restarted = True
            except InitializationError as exc:
                log.warning("restart at step %d skipped: %s", s, exc)
                events.append({"step": s, "event": "init_failed", "detail": str(exc)})
            force_restart = False
            intervals.append(cur_int)
            interval += 1
            cur_int = None
        if restarted:
            count, iso = count_competitive(plan, model), total_iso(plan)
            trace.append(TraceRecord(s, None, count, iso, restart=True))
        else:
            chosen = _step(engine, weights, rng)
            if chosen is None:
                events.append({"step": s, "event": "no_valid_flips"})
                force_restart = True
            count, iso = count_competitive(plan, model), total_iso(plan)
            trace.append(TraceRecord(s, chosen.key if chosen else None, count, iso))
        if cur_int is None or interval_key(count, iso) < interval_key(cur_int.competitive, cur_int.total_iso):
            cur_int = IntervalBest(interval, s, count, iso, list(plan.assignment))
        if _better(count, iso, best[0], best[1]):
            best = (count, iso, s, list(plan.assignment))
    intervals.append(cur_int)

    best_plan = Districting.from_assignment(graph, best[3], config.districts, config.epsilon)
    record = BestPlanRecord(best_plan, best[2], best[0], best[1], trace, intervals, events)
    if config.trace_path:
        write_trace(record.trace, config.trace_path)
    return record


def write_trace(trace: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def _run_one(args):
    graph, config, seed_seq, idx = args
    rec = run_chain(graph, replace(config, trace_path=None), seed=seed_seq)
    rec.chain = idx
    return rec


def run_chains(graph: CellGraph, config: ChainConfig, chains: int = 1,
               workers: int | None = None) -> BestPlanRecord:
    """Independent chains on seeds split from ``config.seed``; deterministic merge.

    With ``chains == 1`` this is exactly ``run_chain(graph, config)``.
    """
    if chains <= 1:
        return run_chain(graph, config)
    seqs = np.random.SeedSequence(config.seed).spawn(chains)
    jobs = [(graph, config, seqs[i], i) for i in range(chains)]
    if workers == 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    best = min(results, key=lambda r: (r.key, r.chain))
    if config.trace_path:
        write_trace(best.trace, config.trace_path)
    return best
