"""Reduction chain Subset Sum -> FPSP -> districting, as instance generators.

FPSP (fixed-proportion subset problem): bins (a_i, b_i) of equal size c with
sum(a) = (1/2 + delta) * sum(a + b); split the bins into two nonempty groups
that each hit the same proportion exactly.

All quantities are exact rationals; generated instances are scaled so every
cell count is a non-negative integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from .districting import Districting, check_epsilon, validate
from .errors import DegenerateInstanceError, ReductionMismatchError, StructuralError
from .exact.brute import solve_brute_force
from .graph import Cell, CellGraph, as_fraction, grid_graph
from .metrics import CompetitivenessModel, Swing, VoteBand

HALF = Fraction(1, 2)


def _lcd(values) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, Fraction(v).denominator)
    return out


@dataclass(frozen=True)
class SubsetSumInstance:
    """Integers t_1..t_{n-1}; asks for a nonempty subset summing to 0."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise StructuralError("subset sum instance needs at least one value")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text: str) -> SubsetSumInstance:
        return cls(tuple(int(x) for x in text.replace(" ", "").split(",") if x))

    def completed(self) -> tuple[int, ...]:
        """Values with t_n = -sum appended, so the whole list sums to zero."""
        return self.values + (-sum(self.values),)

    def is_solvable(self) -> bool:
        return self.solution() is not None

    def solution(self) -> Optional[tuple[int, ...]]:
        """Indices of some nonempty zero-sum subset (brute force), or None."""
        n = len(self.values)
        for r in range(1, n + 1):
            for combo in combinations(range(n), r):
                if sum(self.values[i] for i in combo) == 0:
                    return combo
        return None


@dataclass(frozen=True)
class FpspInstance:
    pairs: tuple[tuple[int, int], ...]
    delta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))
        object.__setattr__(self, "delta", as_fraction(self.delta))
        if not 0 <= self.delta < HALF:
            raise StructuralError(f"FPSP delta must lie in [0, 1/2), got {self.delta}")

    @property
    def bin_size(self) -> int:
        return self.pairs[0][0] + self.pairs[0][1]

    @property
    def total(self) -> int:
        return sum(a + b for a, b in self.pairs)

    def invariant_errors(self) -> list[str]:
        errs = []
        if any(a < 0 or b < 0 for a, b in self.pairs):
            errs.append("negative bin entry")
        if len({a + b for a, b in self.pairs}) != 1:
            errs.append("bins differ in size")
        if sum(a for a, _ in self.pairs) != (HALF + self.delta) * self.total:
            errs.append("global proportion is not 1/2 + delta")
        return errs

    def is_solution(self, group: Sequence[int]) -> bool:
        group = set(group)
        if not group or len(group) >= len(self.pairs):
            return False
        a = sum(self.pairs[i][0] for i in group)
        size = sum(sum(self.pairs[i]) for i in group)
        return a == (HALF + self.delta) * size

    def solve_brute_force(self) -> Optional[tuple[int, ...]]:
        """Some valid first group (the one avoiding the last bin), or None."""
        n = len(self.pairs)
        for r in range(1, n):
            for combo in combinations(range(n - 1), r):
                if self.is_solution(combo):
                    return combo
        return None


@dataclass
class FpspReduction:
    """FPSP instance built from a Subset Sum instance, with the scale applied."""

    source: SubsetSumInstance
    completed: tuple[int, ...]
    scale: int
    fpsp: FpspInstance

    def to_subset(self, group: Sequence[int]) -> tuple[int, ...]:
        """Map an FPSP group to original Subset Sum indices (complementing if it holds t_n)."""
        n = len(self.completed)
        group = set(group)
        if n - 1 in group:
            group = set(range(n)) - group
        return tuple(sorted(group))


def subset_sum_to_fpsp(instance: SubsetSumInstance, delta) -> FpspReduction:
    """a_i = t_i + (1/2 + delta) c and b_i = c - a_i over the completed values.

    c is the smallest bin size keeping every a_i and b_i non-negative. If that
    makes some entry fractional, every t_i is scaled up first (a scaled
    instance has the same zero-sum subsets).
    """
    delta = as_fraction(delta)
    if not 0 <= delta < HALF:
        raise StructuralError(f"delta must lie in [0, 1/2), got {delta}")
    t = instance.completed()
    if all(v == 0 for v in t):
        raise DegenerateInstanceError(
            "all values are zero, so every bin would be empty; use a nonzero instance"
        )
    hi_share, lo_share = HALF + delta, HALF - delta
    c = max(Fraction(-min(t)) / hi_share, Fraction(max(t)) / lo_share)
    scale = _lcd([c, hi_share * c])
    c *= scale
    ts = [v * scale for v in t]
    pairs = []
    for v in ts:
        a = v + hi_share * c
        pairs.append((int(a), int(c - a)))
    fpsp = FpspInstance(tuple(pairs), delta)
    assert not fpsp.invariant_errors(), fpsp.invariant_errors()
    return FpspReduction(instance, t, scale, fpsp)


@dataclass
class HardInstance:
    """A generated 2-district instance plus what is needed to audit it."""

    kind: str  # "vbc" or "swing"
    graph: CellGraph
    d: int
    epsilon: Fraction
    model: CompetitivenessModel
    fpsp: FpspInstance
    scale: int
    heavy_cells: tuple[int, int]
    bin_cells: tuple[int, ...]
    heavy_pop: int
    extra_cells: tuple[int, ...] = ()
    competitive_target: Optional[int] = None
    reduction: Optional[FpspReduction] = field(default=None, repr=False)

    def group_of(self, plan: Districting) -> tuple[int, ...]:
        """FPSP group: bins sharing a district with the first heavy cell."""
        j = plan.assignment[self.heavy_cells[0]]
        return tuple(i for i, cell in enumerate(self.bin_cells) if plan.assignment[cell] == j)

    def trivial_plan(self) -> Districting:
        """A valid plan built without regard to competitiveness."""
        nbins = len(self.bin_cells)
        cols = nbins + (2 if self.kind == "swing" else 0)
        split = (nbins + 1) // 2
        assignment = [0] * self.graph.n
        for c in range(cols):
            assignment[2 * cols + c] = 1
        for i, cell in enumerate(self.bin_cells):
            assignment[cell] = 0 if i < split else 1
        if self.kind == "swing":
            assignment[self.heavy_cells[0]] = 0
            assignment[self.heavy_cells[1]] = 1
        for k, cell in enumerate(self.extra_cells):
            assignment[cell] = 2 + k
        return Districting.from_assignment(self.graph, assignment, self.d, self.epsilon)

    def audit(self) -> dict:
        out = {
            "kind": self.kind,
            "districts": self.d,
            "epsilon": str(self.epsilon),
            "model": str(self.model),
            "fpsp_delta": str(self.fpsp.delta),
            "fpsp_pairs": [list(p) for p in self.fpsp.pairs],
            "scale": self.scale,
            "heavy_cells": list(self.heavy_cells),
            "heavy_pop": self.heavy_pop,
            "bin_cells": list(self.bin_cells),
            "extra_cells": list(self.extra_cells),
            "competitive_target": self.competitive_target,
            "grid_shape": list(self.graph.grid_shape) if self.graph.grid_shape else None,
        }
        if self.reduction is not None:
            out["subset_sum"] = list(self.reduction.source.values)
            out["completed"] = list(self.reduction.completed)
            out["subset_sum_scale"] = self.reduction.scale
        return out


def _heavy_pop(fpsp: FpspInstance, eps: Fraction) -> Fraction:
    """Population P of the two heavy cells together.

    Chosen so the lower district bound sits exactly c/2 above P/2: a heavy
    cell alone is too small, two together are too big, and a heavy cell with
    any 1..n-1 bins is in range.
    """
    if not 0 < eps < Fraction(1, 6):
        raise StructuralError(f"reductions need 0 < epsilon < 1/6, got {eps}")
    n = len(fpsp.pairs)
    if n < 2:
        raise StructuralError("need at least two bins")
    c = fpsp.bin_size
    Z = fpsp.total
    return ((1 - eps) * Z - c) / eps


def fpsp_to_vbc_instance(fpsp: FpspInstance, epsilon) -> HardInstance:
    """3 x n grid: two heavy corner cells on the left at share 1/2 + delta,
    the bins along the middle row, zero-population cells elsewhere."""
    eps = check_epsilon(epsilon)
    delta = fpsp.delta
    if delta == 0:
        raise StructuralError("vote-band instances need delta > 0 (use the swing instance for delta = 0)")
    P = _heavy_pop(fpsp, eps)
    corner_pop = P / 2
    corner_a = (HALF + delta) * corner_pop
    scale = _lcd([corner_pop, corner_a])
    n = len(fpsp.pairs)
    zero = Cell(0, 0, 0)
    cells = [zero] * (3 * n)
    corner = Cell.from_votes(int(corner_a * scale), int((corner_pop - corner_a) * scale))
    cells[0] = corner
    cells[2 * n] = corner
    for i, (a, b) in enumerate(fpsp.pairs):
        cells[n + i] = Cell.from_votes(a * scale, b * scale)
    graph = grid_graph(3, n, cells)
    scaled = FpspInstance(tuple((a * scale, b * scale) for a, b in fpsp.pairs), delta)
    return HardInstance("vbc", graph, 2, eps, VoteBand(delta), scaled, scale,
                        (0, 2 * n), tuple(range(n, 2 * n)), corner.pop)


def fpsp_to_swing_instance(fpsp: FpspInstance, epsilon) -> HardInstance:
    """3 x (n+2) grid: bins (A = a_i, swing = b_i) along the middle row and two
    anchor cells (pop P/2, A = P/4, swing = P/4) at its right end."""
    if fpsp.delta != 0:
        raise StructuralError("the swing reduction needs an FPSP(0) instance")
    eps = check_epsilon(epsilon)
    P = _heavy_pop(fpsp, eps)
    anchor_pop = P / 2
    quarter = P / 4
    scale = _lcd([anchor_pop, quarter])
    n = len(fpsp.pairs)
    cols = n + 2
    zero = Cell(0, 0, 0)
    cells = [zero] * (3 * cols)
    for i, (a, b) in enumerate(fpsp.pairs):
        cells[cols + i] = Cell.from_votes(a * scale, 0, b * scale)
    q = int(quarter * scale)
    anchor = Cell.from_votes(q, int(anchor_pop * scale) - 2 * q, q)
    cells[cols + n] = anchor
    cells[cols + n + 1] = anchor
    graph = grid_graph(3, cols, cells)
    scaled = FpspInstance(tuple((a * scale, b * scale) for a, b in fpsp.pairs), Fraction(0))
    return HardInstance("swing", graph, 2, eps, Swing(), scaled, scale,
                        (cols + n, cols + n + 1), tuple(range(cols, cols + n)), anchor.pop)


def extend_to_d_districts(instance: HardInstance, k: int, d_target: int) -> HardInstance:
    """Add d_target - 2 cells, each at the base ideal population, in a chain
    hanging off the first heavy cell.

    k - 2 of them are half A / half B (competitive alone), the rest all A.
    Each added cell must then be its own district: with another added cell or
    the heavy cell it would exceed the upper bound. The ideal population is
    unchanged, so the base band is too.
    """
    if instance.d != 2:
        raise StructuralError("can only extend a 2-district instance")
    if not 2 <= k <= d_target:
        raise StructuralError(f"need 2 <= k <= d_target, got k={k}, d_target={d_target}")
    if d_target == 2:
        return instance
    base = instance.graph
    T = base.total_pop
    ideal = Fraction(T, 2)
    if not instance.heavy_pop > instance.epsilon * ideal:
        raise StructuralError("heavy cell is too light to force the added cells apart")
    scale = _lcd([ideal, ideal / 2])
    m = d_target - 2
    cells = [Cell(c.pop * scale, c.party_a * scale, c.party_b * scale, c.swing * scale, c.area)
             for c in base.cells]
    pop = int(ideal * scale)
    half = pop // 2
    for j in range(m):
        if j < k - 2:
            cells.append(Cell.from_votes(half, pop - half))
        else:
            cells.append(Cell.from_votes(pop, 0))
    n0 = base.n
    edges = list(base.edges)
    anchor = instance.heavy_cells[0]
    prev = anchor
    for j in range(m):
        edges.append((prev, n0 + j, 1.0))
        prev = n0 + j
    exterior = list(base.exterior_boundary) + [3.0] * m
    exterior[anchor] = max(0.0, exterior[anchor] - 1.0)
    if m:
        exterior[n0 + m - 1] = 3.0
    graph = CellGraph(cells, edges, exterior)
    return HardInstance(instance.kind, graph, d_target, instance.epsilon, instance.model,
                        instance.fpsp, instance.scale * scale, instance.heavy_cells,
                        instance.bin_cells, instance.heavy_pop * scale,
                        tuple(range(n0, n0 + m)), k, instance.reduction)


def generate(subset_sum: SubsetSumInstance, model: str, epsilon, delta=Fraction(1, 10)) -> HardInstance:
    """Run the whole chain for ``model`` in {"vbc", "swing"}."""
    if model == "vbc":
        red = subset_sum_to_fpsp(subset_sum, delta)
        inst = fpsp_to_vbc_instance(red.fpsp, epsilon)
    elif model == "swing":
        red = subset_sum_to_fpsp(subset_sum, 0)
        inst = fpsp_to_swing_instance(red.fpsp, epsilon)
    else:
        raise StructuralError(f"unknown reduction model {model!r}")
    inst.reduction = red
    return inst


@dataclass
class RoundTripReport:
    values: tuple[int, ...]
    model: str
    subset_sum_solvable: bool
    fpsp_solvable: bool
    best_count: Optional[int]
    districting_solvable: bool
    recovered_subset: Optional[tuple[int, ...]]
    trivial_plan_valid: bool
    plans_checked: int

    @property
    def agree(self) -> bool:
        return self.subset_sum_solvable == self.districting_solvable == self.fpsp_solvable


def verify_reduction_roundtrip(subset_sum: SubsetSumInstance, delta, epsilon,
                               model: CompetitivenessModel, max_cells: int = 40) -> RoundTripReport:
    """Chain the reductions, brute-force the districting, and map any
    2-competitive plan back to a zero-sum subset. Raises ReductionMismatchError
    when the two sides disagree."""
    kind = "swing" if isinstance(model, Swing) else "vbc"
    if kind == "vbc":
        delta = model.delta if delta is None else as_fraction(delta)
    inst = generate(subset_sum, kind, epsilon, delta if kind == "vbc" else 0)
    trivial_ok = not validate(inst.trivial_plan(), inst.graph)
    if not trivial_ok:
        raise ReductionMismatchError("the trivial plan is not epsilon-valid", inst.trivial_plan())
    res = solve_brute_force(inst.graph, 2, inst.epsilon, inst.model, max_cells=max_cells, stop_at=2)
    solvable_ss = subset_sum.is_solvable()
    fpsp_ok = inst.fpsp.solve_brute_force() is not None
    recovered = None
    dist_ok = res.best_count == 2
    if dist_ok:
        group = inst.group_of(res.witness)
        if not inst.fpsp.is_solution(group):
            raise ReductionMismatchError(f"2-competitive plan maps to non-solution group {group}",
                                         res.witness)
        recovered = inst.reduction.to_subset(group)
        if not recovered or sum(subset_sum.values[i] for i in recovered) != 0:
            raise ReductionMismatchError(f"recovered subset {recovered} does not sum to zero",
                                         res.witness)
    report = RoundTripReport(subset_sum.values, str(inst.model), solvable_ss, fpsp_ok,
                             res.best_count, dist_ok, recovered, trivial_ok,
                             res.explored.get("plans", 0))
    if not report.agree:
        raise ReductionMismatchError(
            f"disagreement on {subset_sum.values}: subset sum {solvable_ss}, "
            f"FPSP {fpsp_ok}, districting {dist_ok}", res.witness
        )
    return report
