"""Competitiveness predicates, hill-climbing score terms, and plan summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import StructuralError, UndefinedCompetitivenessError
from .graph import CellGraph, as_fraction

HALF = Fraction(1, 2)
ISO_INFIMUM = 4 * math.pi  # circle

# landslide / competitive thresholds
DELTA_LANDSLIDE = Fraction(1, 10)
DELTA_COMPETITIVE = Fraction(1, 20)
DEFAULT_DELTA = DELTA_COMPETITIVE


@dataclass(frozen=True)
class VoteBand:
    delta: Fraction = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "delta", as_fraction(self.delta))
        if not 0 < self.delta < HALF:
            raise StructuralError(f"vote-band delta must lie in (0, 1/2), got {self.delta}")

    def is_competitive(self, agg) -> bool:
        return is_vbc_competitive(agg, self.delta)

    def __str__(self):
        return f"vbc:{self.delta}"


@dataclass(frozen=True)
class Swing:
    def is_competitive(self, agg) -> bool:
        return is_swing(agg)

    def __str__(self):
        return "swing"


CompetitivenessModel = Union[VoteBand, Swing]


def parse_model(text: str) -> CompetitivenessModel:
    """``"swing"``, ``"vbc"`` or ``"vbc:<delta>"`` (delta as decimal or p/q)."""
    text = text.strip().lower()
    if text == "swing":
        return Swing()
    if text == "vbc":
        return VoteBand()
    if text.startswith("vbc:"):
        return VoteBand(as_fraction(text[4:]))
    raise StructuralError(f"unknown competitiveness model {text!r}")


@dataclass(frozen=True)
class ScoreWeights:
    w_iso: float = 3.0
    w_vbc: float = 0.0
    w_sw: float = 0.0
    delta: Fraction = DEFAULT_DELTA

    def __post_init__(self):
        for name in ("w_iso", "w_vbc", "w_sw"):
            w = getattr(self, name)
            if not (math.isfinite(w) and w >= 0):
                raise StructuralError(f"{name} must be finite and >= 0, got {w}")
        object.__setattr__(self, "delta", as_fraction(self.delta))


def is_vbc_competitive(agg, delta) -> bool:
    """Both party shares inside [1/2 - delta, 1/2 + delta], compared exactly."""
    if agg.pop <= 0:
        raise UndefinedCompetitivenessError("vote-band competitiveness of an empty-population district")
    delta = as_fraction(delta)
    lo = (HALF - delta) * agg.pop
    hi = (HALF + delta) * agg.pop
    return lo <= agg.party_a <= hi and lo <= agg.party_b <= hi


def is_swing(agg) -> bool:
    return agg.swing >= abs(agg.party_a - agg.party_b)


def count_competitive(districting, model: CompetitivenessModel) -> int:
    return sum(1 for agg in districting.aggregates if model.is_competitive(agg))


def iso_score(agg) -> float:
    """Isoperimetric ratio perimeter^2 / area (lower is more compact)."""
    area = float(agg.area)
    if area <= 0:
        raise ValueError(f"isoperimetric score needs positive area, got {area}")
    per = float(agg.perimeter)
    return per * per / area


def _vbc_from_counts(party_a: int, pop: int, delta: float) -> float:
    if pop <= 0:
        raise UndefinedCompetitivenessError("vote-band score of an empty-population district")
    x = party_a / pop - 0.5
    if abs(x) > delta:
        return x * x
    return x * x / 16.0


def vbc_score(agg, delta) -> float:
    return _vbc_from_counts(agg.party_a, agg.pop, float(delta))


def _swing_from_counts(party_a: int, party_b: int, swing: int, pop: int) -> float:
    if pop <= 0:
        raise UndefinedCompetitivenessError("swing score of an empty-population district")
    y = 0.5 - (swing / (2 * pop) + party_a / pop)
    if 2 * party_a > pop or 2 * party_b > pop:
        return y * y
    return y * y * 0.64


def swing_score(agg) -> float:
    return _swing_from_counts(agg.party_a, agg.party_b, agg.swing, agg.pop)


def total_iso(districting) -> float:
    return math.fsum(iso_score(a) for a in districting.aggregates)


@dataclass
class DistrictSummary:
    district: int
    pop: int
    a_share: float
    b_share: float
    swing_share: float
    vbc_competitive: bool | None
    swing_competitive: bool
    competitive: bool
    iso: float | None
    outcome_range: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        out = {
            "district": self.district,
            "pop": self.pop,
            "a_share": self.a_share,
            "b_share": self.b_share,
            "swing_share": self.swing_share,
            "vbc_competitive": self.vbc_competitive,
            "swing_competitive": self.swing_competitive,
            "competitive": self.competitive,
            "iso": self.iso,
        }
        if self.outcome_range is not None:
            out["outcome_range"] = list(self.outcome_range)
        return out


@dataclass
class Summary:
    model: str
    districts: list[DistrictSummary]
    competitive_count: int
    total_iso: float | None
    seats_a: int
    seats_b: int
    seats_tied: int
    sorted_a_shares: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "competitive_count": self.competitive_count,
            "total_iso": self.total_iso,
            "seats": {"a": self.seats_a, "b": self.seats_b, "tied": self.seats_tied},
            "sorted_a_shares": self.sorted_a_shares,
            "districts": [d.to_dict() for d in self.districts],
        }


def plan_summary(districting, model: CompetitivenessModel) -> Summary:
    """Per-district shares and flags plus plan-level totals.

    For the swing model each district also carries the outcome range: its
    A-share if every swing voter went to B, and if every swing voter went to A.
    """
    rows = []
    seats = {"a": 0, "b": 0, "tied": 0}
    for j, agg in enumerate(districting.aggregates):
        pop = agg.pop
        if pop > 0:
            a_share, b_share, s_share = agg.party_a / pop, agg.party_b / pop, agg.swing / pop
            vbc = is_vbc_competitive(agg, model.delta) if isinstance(model, VoteBand) else None
        else:
            a_share = b_share = s_share = math.nan
            vbc = None
        sw = is_swing(agg)
        iso = iso_score(agg) if agg.area > 0 else None
        outcome = None
        if isinstance(model, Swing) and pop > 0:
            outcome = (agg.party_a / pop, (agg.party_a + agg.swing) / pop)
        rows.append(DistrictSummary(
            district=j, pop=pop, a_share=a_share, b_share=b_share, swing_share=s_share,
            vbc_competitive=vbc, swing_competitive=sw,
            competitive=model.is_competitive(agg), iso=iso, outcome_range=outcome,
        ))
        if agg.party_a > agg.party_b:
            seats["a"] += 1
        elif agg.party_b > agg.party_a:
            seats["b"] += 1
        else:
            seats["tied"] += 1
    isos = [r.iso for r in rows]
    return Summary(
        model=str(model),
        districts=rows,
        competitive_count=sum(r.competitive for r in rows),
        total_iso=math.fsum(isos) if all(x is not None for x in isos) else None,
        seats_a=seats["a"], seats_b=seats["b"], seats_tied=seats["tied"],
        sorted_a_shares=sorted(r.a_share for r in rows),
    )


def graph_aggregate(graph: CellGraph):
    """Whole-state aggregate, handy for statewide shares."""
    from .districting import compute_aggregates
    return compute_aggregates(graph, [0] * graph.n, 1)[0]
