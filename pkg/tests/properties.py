"""Hypothesis properties for every module's invariants.

Each property records its argument strategies; ``run_property`` wraps it in a
fresh hypothesis test with the requested example count, so the quick run and
the acceptance run can both use the same property. ``CASES`` counts passing
examples per property.
"""

import functools
import math
import random
import tempfile
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from compdist.districting import (apply_flip, compute_aggregates, is_flip_valid, random_initial_districting,
                                  validate)
from compdist.ei import EiTable, aggregate_swing, estimate_ei_table
from compdist.errors import InitializationError, StructuralError
from compdist.exact import build_conflict_graph, is_claw_free, line_table
from compdist.graph import Cell, grid_graph, path_graph
from compdist.hardness import SubsetSumInstance, generate, subset_sum_to_fpsp
from compdist.io import load_graph, save_graph
from compdist.metrics import (ScoreWeights, Swing, VoteBand, count_competitive, is_swing, is_vbc_competitive,
                              plan_summary, swing_score, vbc_score)
from compdist.optimizer import ChainConfig, enumerate_flips, flip_weight, run_chain
from conftest import EPS_CHOICES
from oracles import grid_case, line_case, tree_case

CASES: Counter = Counter()

deltas = st.sampled_from([Fraction(1, 20), Fraction(1, 10), Fraction(1, 5), Fraction(7, 20)])
seeds = st.integers(0, 2 ** 32 - 1)


def counted(fn):
    """Count an example only once the property body returned without error."""
    name = fn.__name__[len("prop_"):]

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        fn(*args, **kwargs)
        CASES[name] += 1

    return inner


def strategies(*strats):
    """Attach the argument strategies; ``run_property`` builds a fresh hypothesis test per call."""
    def deco(fn):
        fn = counted(fn)
        fn.strategies = strats
        return fn
    return deco


@st.composite
def grids(draw, min_pop=1, max_pop=9, max_side=5, swing=True):
    rows = draw(st.integers(2, max_side))
    cols = draw(st.integers(2, max_side))
    cells = []
    for _ in range(rows * cols):
        pop = draw(st.integers(min_pop, max_pop))
        a = draw(st.integers(0, pop))
        s = draw(st.integers(0, pop - a)) if swing else 0
        area = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0]))
        cells.append(Cell.from_votes(a, pop - a - s, s, area=area))
    return grid_graph(rows, cols, cells)


@st.composite
def valid_plans(draw):
    g = draw(grids(min_pop=5))
    d = draw(st.integers(2, 3))
    eps = draw(st.sampled_from([Fraction(1, 10), Fraction(3, 20)]))
    seed = draw(seeds)
    try:
        plan = random_initial_districting(g, d, eps, seed=seed, max_retries=50)
    except InitializationError:
        assume(False)
    return g, plan


def aggregates_of(counts):
    a, b, s = counts
    return compute_aggregates(path_graph([Cell.from_votes(a, b, s)]), [0], 1)[0]


votes = st.tuples(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500)).filter(lambda t: sum(t) > 0)


# districting -----------------------------------------------------------------

@strategies(valid_plans())
def prop_init_partition_valid(case):
    g, plan = case
    assert len(plan.assignment) == g.n
    assert set(plan.assignment) == set(range(plan.d))
    assert validate(plan, g) == []


@strategies(valid_plans(), seeds)
def prop_flips_conserve_and_match_batch(case, seed):
    g, plan = case
    r = random.Random(seed)
    totals = g.totals()
    for _ in range(8):
        moves = enumerate_flips(plan, g)
        if not moves:
            break
        m = r.choice(moves)
        apply_flip(plan, g, m.cell, m.target)
    fresh = compute_aggregates(g, plan.assignment, plan.d)
    assert plan.aggregates == fresh
    assert (sum(a.pop for a in fresh), sum(a.party_a for a in fresh), sum(a.party_b for a in fresh),
            sum(a.swing for a in fresh)) == tuple(totals[:4])


@strategies(valid_plans())
def prop_flip_valid_implies_valid(case):
    g, plan = case
    listed = {c.key for c in enumerate_flips(plan, g)}
    for u in range(g.n):
        for t in range(plan.d):
            if t == plan.assignment[u]:
                continue
            ok = is_flip_valid(plan, g, u, t)
            assert ok == ((u, plan.assignment[u], t) in listed)
            if ok:
                src = plan.assignment[u]
                before = [x.copy() for x in plan.aggregates]
                apply_flip(plan, g, u, t)
                assert validate(plan, g) == []
                apply_flip(plan, g, u, src)
                assert plan.aggregates == before


# metrics ---------------------------------------------------------------------

@strategies(votes, deltas)
def prop_vbc_symmetry(counts, delta):
    a, b, _ = counts
    assume(a + b > 0)
    x, y = aggregates_of((a, b, 0)), aggregates_of((b, a, 0))
    assert is_vbc_competitive(x, delta) == is_vbc_competitive(y, delta)


@strategies(votes, deltas, st.integers(2, 50))
def prop_scale_invariance(counts, delta, k):
    x = aggregates_of(counts)
    y = aggregates_of(tuple(k * v for v in counts))
    assert is_vbc_competitive(x, delta) == is_vbc_competitive(y, delta)
    assert is_swing(x) == is_swing(y)
    assert math.isclose(vbc_score(x, delta), vbc_score(y, delta), rel_tol=1e-9, abs_tol=1e-15)
    assert math.isclose(swing_score(x), swing_score(y), rel_tol=1e-9, abs_tol=1e-15)


@strategies(votes, deltas)
def prop_scores_nonnegative_zero_at_ideal(counts, delta):
    x = aggregates_of(counts)
    v, s = vbc_score(x, delta), swing_score(x)
    assert v >= 0 and s >= 0
    assert (v == 0) == (2 * x.party_a == x.pop)
    assert (s == 0) == (x.pop == x.swing + 2 * x.party_a)


@strategies(st.integers(1, 400), st.integers(0, 400), deltas)
def prop_in_band_discount(pop, a, delta):
    assume(a <= pop)
    x = aggregates_of((a, pop - a, 0))
    share = Fraction(a, pop) - Fraction(1, 2)
    raw = (a / pop - 0.5) ** 2
    if abs(share) <= delta:
        assert math.isclose(16 * vbc_score(x, delta), raw, rel_tol=1e-12, abs_tol=1e-18)
    else:
        assert vbc_score(x, delta) == raw


@strategies(valid_plans(), deltas)
def prop_count_consistency(case, delta):
    g, plan = case
    for model in (VoteBand(delta), Swing()):
        direct = sum(model.is_competitive(a) for a in compute_aggregates(g, plan.assignment, plan.d))
        assert count_competitive(plan, model) == direct == plan_summary(plan, model).competitive_count


# optimizer -------------------------------------------------------------------

@strategies(grids(min_pop=5, max_side=4), seeds, st.sampled_from(["vbc", "swing"]))
def prop_chain_valid_deterministic_monotone(g, seed, kind):
    model = VoteBand(Fraction(1, 10)) if kind == "vbc" else Swing()
    w = ScoreWeights(3.0, 1e5, 0.0, Fraction(1, 10)) if kind == "vbc" else ScoreWeights(3.0, 0.0, 1e5)
    cfg = ChainConfig(2, total_steps=30, restart_every=10, weights=w, model=model, seed=seed,
                      epsilon=Fraction(3, 20), init_retries=50)
    try:
        a = run_chain(g, cfg)
    except InitializationError:
        assume(False)
    b = run_chain(g, cfg)
    assert a.plan.assignment == b.plan.assignment
    assert [t.to_dict() for t in a.trace] == [t.to_dict() for t in b.trace]
    assert validate(a.plan, g) == []
    assert a.competitive >= a.trace[0].competitive
    best = (-1, -math.inf)
    for t in a.trace:
        best = max(best, (t.competitive, -t.total_iso))
    assert best == (a.competitive, -a.total_iso)


@strategies(valid_plans(), st.sampled_from([(3.0, 1e5, 0.0), (3.0, 0.0, 1e5), (1.0, 50.0, 50.0)]))
def prop_flip_weight_matches_scratch(case, w):
    from test_optimizer import scratch_weight
    g, plan = case
    weights = ScoreWeights(*w, Fraction(1, 10))
    for c in enumerate_flips(plan, g)[:6]:
        got = flip_weight(plan, g, c, weights)
        assert math.isfinite(got) and got > 0
        assert math.isclose(got, scratch_weight(plan, g, c, weights), rel_tol=1e-9)


# exact solvers ---------------------------------------------------------------

@strategies(seeds)
def prop_line_matches_brute(seed):
    assert line_case(seed)[0]


@strategies(seeds)
def prop_tree_matches_brute(seed):
    assert tree_case(seed)[0]


@strategies(seeds)
def prop_grid_matches_brute(seed):
    assert grid_case(seed)[0]


@strategies(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 4)), min_size=1, max_size=9),
       st.integers(1, 4), st.sampled_from(EPS_CHOICES))
def prop_line_table_at_most_k(cells, d, eps):
    assume(any(sum(c) for c in cells) and d <= len(cells))
    g = path_graph([Cell.from_votes(*c) for c in cells])
    for row in line_table(g, d, eps):
        for k, m in enumerate(row):
            assert m is None or 0 <= m <= k


@strategies(st.sampled_from([(2, 2, 2), (2, 3, 2), (2, 3, 3), (3, 2, 3), (2, 4, 2), (2, 4, 4), (3, 3, 3)]), seeds)
def prop_conflict_graph_claw_free(shape, seed):
    rows, cols, d = shape
    r = random.Random(seed)
    g = grid_graph(rows, cols, [Cell.from_votes(r.randint(0, 5), r.randint(0, 5), r.randint(0, 3))
                                for _ in range(rows * cols)])
    cg = build_conflict_graph(g, d)
    assert is_claw_free(cg)


# hardness --------------------------------------------------------------------

subset_sums = st.lists(st.integers(-8, 8), min_size=1, max_size=6).filter(lambda v: any(v) or sum(v) != 0)


@strategies(subset_sums, st.sampled_from([Fraction(0), Fraction(1, 20), Fraction(1, 10), Fraction(1, 7)]))
def prop_fpsp_invariants(values, delta):
    inst = SubsetSumInstance(tuple(values))
    assume(any(inst.completed()))
    red = subset_sum_to_fpsp(inst, delta)
    assert red.fpsp.invariant_errors() == []
    group = red.fpsp.solve_brute_force()
    assert (group is not None) == inst.is_solvable()
    if group is not None:
        sub = red.to_subset(group)
        assert sub and sum(values[i] for i in sub) == 0


@strategies(subset_sums, st.sampled_from(["vbc", "swing"]), st.sampled_from([Fraction(1, 20), Fraction(3, 20)]))
def prop_generated_instances_sound(values, kind, eps):
    inst = SubsetSumInstance(tuple(values))
    assume(any(inst.completed()))
    h = generate(inst, kind, eps, Fraction(1, 10))
    assert h.graph.max_degree() <= 4 and h.graph.grid_shape is not None
    assert validate(h.trivial_plan(), h.graph) == []
    assert all(c.pop == c.party_a + c.party_b + c.swing >= 0 for c in h.graph.cells)


# data-io ---------------------------------------------------------------------

marginals = st.lists(st.integers(0, 3000), min_size=3, max_size=3)


@strategies(marginals, marginals)
def prop_ipf_monotone_and_consistent(rows, cols):
    t = estimate_ei_table(rows, cols)
    if sum(rows) == 0 and sum(cols) == 0:
        assert not t.inner.any()
        return
    res = t.residuals
    assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(res, res[1:]))
    assert t.is_consistent(1e-6)


@strategies(st.lists(st.floats(0, 1e4, allow_nan=False), min_size=9, max_size=9), st.integers(1, 20))
def prop_aggregate_swing_symmetry_linearity(vals, k):
    m = np.array(vals).reshape(3, 3)
    base = aggregate_swing(EiTable.from_inner(m))
    perm = [1, 0, 2]
    swapped = aggregate_swing(EiTable.from_inner(m[perm][:, perm]))
    assert math.isclose(base, swapped, rel_tol=1e-12, abs_tol=1e-9)
    assert math.isclose(aggregate_swing(EiTable.from_inner(m * k)), k * base, rel_tol=1e-9, abs_tol=1e-9)


@strategies(grids(min_pop=0, max_side=4))
def prop_save_load_round_trip(g):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "g.json"
        save_graph(g, path)
        back = load_graph(path)
    assert back.cells == g.cells and back.edges == g.edges
    assert back.exterior_boundary == g.exterior_boundary and back.ids == g.ids


@strategies(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20), st.integers(-3, 3))
def prop_cell_identity_enforced(a, b, s, off):
    pop = a + b + s + off
    try:
        c = Cell(pop, a, b, s)
    except StructuralError:
        assert off != 0
    else:
        assert off == 0 and c.pop == a + b + s


# registry: name -> (property, examples in the full acceptance run)
PROPERTIES = {
    "init_partition_valid": (prop_init_partition_valid, 500),
    "flips_conserve_and_match_batch": (prop_flips_conserve_and_match_batch, 400),
    "flip_valid_implies_valid": (prop_flip_valid_implies_valid, 300),
    "vbc_symmetry": (prop_vbc_symmetry, 1000),
    "scale_invariance": (prop_scale_invariance, 1000),
    "scores_nonnegative_zero_at_ideal": (prop_scores_nonnegative_zero_at_ideal, 1000),
    "in_band_discount": (prop_in_band_discount, 1000),
    "count_consistency": (prop_count_consistency, 300),
    "chain_valid_deterministic_monotone": (prop_chain_valid_deterministic_monotone, 60),
    "flip_weight_matches_scratch": (prop_flip_weight_matches_scratch, 300),
    "line_matches_brute": (prop_line_matches_brute, 400),
    "tree_matches_brute": (prop_tree_matches_brute, 400),
    "grid_matches_brute": (prop_grid_matches_brute, 300),
    "line_table_at_most_k": (prop_line_table_at_most_k, 500),
    "conflict_graph_claw_free": (prop_conflict_graph_claw_free, 150),
    "fpsp_invariants": (prop_fpsp_invariants, 1000),
    "generated_instances_sound": (prop_generated_instances_sound, 400),
    "ipf_monotone_and_consistent": (prop_ipf_monotone_and_consistent, 800),
    "aggregate_swing_symmetry_linearity": (prop_aggregate_swing_symmetry_linearity, 800),
    "save_load_round_trip": (prop_save_load_round_trip, 200),
    "cell_identity_enforced": (prop_cell_identity_enforced, 500),
}


def run_property(name: str, examples: int) -> int:
    """Run one property with ``examples`` cases; returns how many actually executed."""
    prop, _ = PROPERTIES[name]
    before = CASES[name]
    configured = settings(max_examples=examples, derandomize=True, deadline=None, database=None,
                          suppress_health_check=list(HealthCheck))(given(*prop.strategies)(prop))
    configured()
    return CASES[name] - before
