import math
import random
from fractions import Fraction

import numpy as np
import pytest

from compdist.districting import (Districting, compute_aggregates, is_flip_valid, random_initial_districting,
                                  validate)
from compdist.errors import StructuralError
from compdist.graph import Cell, grid_graph, path_graph
from compdist.metrics import (ScoreWeights, Swing, VoteBand, count_competitive, iso_score, swing_score,
                              vbc_score)
from compdist.optimizer import (ChainConfig, compact_sample_config, enumerate_flips,
                                flip_weight, reference_config, run_chain, run_chains, step)
from conftest import uniform_grid


def scratch_weight(plan, graph, cand, weights):
    """exp(-sum w_i dJ_i) with every score recomputed from a fresh post-flip plan."""
    after = list(plan.assignment)
    after[cand.cell] = cand.target
    before_aggs = compute_aggregates(graph, plan.assignment, plan.d)
    after_aggs = compute_aggregates(graph, after, plan.d)
    js = [cand.source, cand.target]

    def total(aggs):
        t = weights.w_iso * sum(iso_score(aggs[j]) for j in js)
        if weights.w_vbc:
            t += weights.w_vbc * sum(vbc_score(aggs[j], weights.delta) for j in js)
        if weights.w_sw:
            t += weights.w_sw * sum(swing_score(aggs[j]) for j in js)
        return t

    e = -(total(after_aggs) - total(before_aggs))
    return math.exp(min(max(e, -700), 700))


def test_no_flips_on_balanced_2x2():
    g = uniform_grid(2, 2)
    plan = Districting.from_assignment(g, [0, 1, 0, 1], 2, 0)
    assert enumerate_flips(plan, g) == []
    cfg = ChainConfig(2, total_steps=2, restart_every=2, epsilon=0)
    assert step(plan, g, cfg, np.random.default_rng(0))[1] is None


def test_path_flips_exact():
    g = path_graph([Cell.from_votes(5, 5), Cell.from_votes(1, 0), Cell.from_votes(5, 5)])
    plan = Districting.from_assignment(g, [0, 0, 1], 2, Fraction(3, 20))
    # c -> D1 would empty D2, so only b moves
    assert [c.key for c in enumerate_flips(plan, g)] == [(1, 0, 1)]


def test_enumeration_is_complete():
    r = random.Random(2)
    g = grid_graph(4, 5, [Cell.from_votes(r.randint(1, 6), r.randint(1, 6)) for _ in range(20)])
    plan = random_initial_districting(g, 3, Fraction(3, 20), seed=4)
    got = {c.key for c in enumerate_flips(plan, g)}
    want = {(u, plan.assignment[u], t) for u in range(g.n) for t in range(3)
            if t != plan.assignment[u] and is_flip_valid(plan, g, u, t)}
    assert got == want
    keys = [c.key for c in enumerate_flips(plan, g)]
    assert keys == sorted(keys)


def test_zero_delta_weight_is_one():
    g = uniform_grid(2, 10)
    plan = Districting.from_assignment(g, ([0] * 5 + [1] * 5) * 2, 2, Fraction(3, 20))
    cands = enumerate_flips(plan, g)
    assert cands
    zero = ScoreWeights(0.0, 0.0, 0.0)
    assert all(flip_weight(plan, g, c, zero) == 1.0 for c in cands)


def test_weight_matches_scratch_and_clamps():
    r = random.Random(5)
    g = grid_graph(5, 5, [Cell.from_votes(r.randint(1, 9), r.randint(1, 9), r.randint(0, 4)) for _ in range(25)])
    plan = random_initial_districting(g, 3, Fraction(3, 20), seed=5)
    for weights in (ScoreWeights(3.0, 1e5, 0.0, Fraction(1, 10)), ScoreWeights(3.0, 0.0, 1e5),
                    ScoreWeights(0.5, 10.0, 10.0)):
        for c in enumerate_flips(plan, g):
            w = flip_weight(plan, g, c, weights)
            assert math.isfinite(w) and w > 0
            assert w == pytest.approx(scratch_weight(plan, g, c, weights), rel=1e-9)


def test_single_candidate_always_chosen():
    g = path_graph([Cell.from_votes(5, 5), Cell.from_votes(1, 0), Cell.from_votes(5, 5)])
    cfg = ChainConfig(2, total_steps=1, restart_every=1, epsilon=Fraction(3, 20))
    for seed in range(20):
        plan = Districting.from_assignment(g, [0, 0, 1], 2, Fraction(3, 20))
        _, chosen = step(plan, g, cfg, np.random.default_rng(seed))
        assert chosen.key == (1, 0, 1)
        assert plan.assignment == [0, 1, 1]


def test_config_validation_and_presets():
    with pytest.raises(StructuralError):
        ChainConfig(2, total_steps=10, restart_every=20)
    with pytest.raises(StructuralError):
        ChainConfig(2, epsilon=Fraction(1, 6))
    cfg = reference_config(4, VoteBand(Fraction(1, 10)))
    assert (cfg.total_steps, cfg.restart_every) == (36000, 3000)
    assert (cfg.weights.w_iso, cfg.weights.w_vbc, cfg.weights.w_sw) == (3.0, 1e5, 0.0)
    assert reference_config(4, Swing()).weights.w_sw == 1e5
    c = compact_sample_config(4)
    assert (c.total_steps, c.restart_every, c.compact_only) == (40000, 200, True)


def small_chain(seed=3, **kw):
    r = random.Random(1)
    g = grid_graph(5, 5, [Cell.from_votes(r.randint(1, 9), r.randint(1, 9)) for _ in range(25)])
    params = dict(total_steps=300, restart_every=100, seed=seed, epsilon=Fraction(3, 20))
    params.update(kw)
    cfg = reference_config(3, VoteBand(Fraction(1, 10)), **params)
    return g, cfg


def test_chain_determinism_and_monotone_best(tmp_path):
    g, cfg = small_chain(trace_path=str(tmp_path / "t.jsonl"))
    a = run_chain(g, cfg)
    b = run_chain(g, cfg)
    assert a.plan.assignment == b.plan.assignment
    assert [t.to_dict() for t in a.trace] == [t.to_dict() for t in b.trace]
    assert len(a.trace) == cfg.total_steps + 1
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == cfg.total_steps + 1
    assert validate(a.plan, g) == []
    assert a.competitive >= a.trace[0].competitive
    assert a.competitive == count_competitive(a.plan, cfg.model)
    running = (-1, 0.0)
    for t in a.trace:
        key = (t.competitive, -t.total_iso)
        running = max(running, key)
    assert running == (a.competitive, -a.total_iso)
    assert [t.step for t in a.trace if t.restart] == [0, 101, 201]
    assert len(a.interval_bests) == 3


def test_run_chains_deterministic():
    g, cfg = small_chain(total_steps=100, restart_every=50)
    a = run_chains(g, cfg, chains=2, workers=1)
    b = run_chains(g, cfg, chains=2, workers=1)
    assert a.plan.assignment == b.plan.assignment and a.chain == b.chain
    assert run_chains(g, cfg, chains=1).plan.assignment == run_chain(g, cfg).plan.assignment


def test_no_valid_flips_forces_restart():
    g = uniform_grid(2, 2)
    cfg = ChainConfig(2, total_steps=4, restart_every=4, epsilon=0)
    rec = run_chain(g, cfg)
    assert any(e["event"] == "no_valid_flips" for e in rec.events)
    assert rec.trace[2].restart
