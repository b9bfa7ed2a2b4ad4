"""Swing-voter estimates from two elections' precinct totals.

Each precinct gets a 3x3 transition table (rows: first election, columns:
second; order A, B, nonvote/other). Inner cells are filled by iterative
proportional fitting from a seed that favours staying put, then swing voters
are the off-diagonal mass with nonvote transitions counted at half weight.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import GraphFormatError, StructuralError
from .graph import Cell

LABELS = ("party_a", "party_b", "nonvote_other")
NONVOTE = 2


@dataclass
class EiTable:
    inner: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    sweeps: int = 0
    residuals: list[float] = field(default_factory=list, repr=False)

    @classmethod
    def from_inner(cls, inner) -> EiTable:
        inner = np.asarray(inner, dtype=float)
        if inner.shape != (3, 3):
            raise StructuralError(f"EI table must be 3x3, got {inner.shape}")
        if (inner < 0).any():
            raise StructuralError("EI table entries must be non-negative")
        return cls(inner, inner.sum(axis=1), inner.sum(axis=0))

    def marginal_residual(self) -> float:
        """Largest relative deviation of a row or column sum from its marginal."""
        total = max(float(self.row_marginals.sum()), 1.0)
        dr = np.abs(self.inner.sum(axis=1) - self.row_marginals).max()
        dc = np.abs(self.inner.sum(axis=0) - self.col_marginals).max()
        return float(max(dr, dc) / total)

    def is_consistent(self, rtol: float = 1e-6) -> bool:
        return self.marginal_residual() <= rtol


def _pad(rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gap = rows.sum() - cols.sum()
    if gap > 0:
        cols = cols.copy()
        cols[NONVOTE] += gap
    elif gap < 0:
        rows = rows.copy()
        rows[NONVOTE] -= gap
    return rows, cols


def estimate_ei_table(row_marginals: Sequence[float], col_marginals: Sequence[float],
                      diag_weight: float = 10.0, tol: float = 1e-9,
                      max_sweeps: int = 10_000) -> EiTable:
    """IPF from a seed with ``diag_weight`` on the diagonal and 1 elsewhere.

    If the two totals differ, the nonvote marginal of the smaller side absorbs
    the gap. Stops when the relative L1 row residual (columns are exact after
    each sweep) drops below ``tol``.
    """
    rows = np.asarray(row_marginals, dtype=float)
    cols = np.asarray(col_marginals, dtype=float)
    if rows.shape != (3,) or cols.shape != (3,):
        raise StructuralError("marginals must have three entries each")
    if (rows < 0).any() or (cols < 0).any():
        raise StructuralError("marginals must be non-negative")
    rows, cols = _pad(rows, cols)
    total = rows.sum()
    if total == 0:
        return EiTable(np.zeros((3, 3)), rows, cols)
    x = np.ones((3, 3))
    np.fill_diagonal(x, diag_weight)
    x[rows == 0, :] = 0.0
    x[:, cols == 0] = 0.0
    residuals = []
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        rs = x.sum(axis=1)
        f = np.divide(rows, rs, out=np.zeros(3), where=rs > 0)
        x *= f[:, None]
        cs = x.sum(axis=0)
        g = np.divide(cols, cs, out=np.zeros(3), where=cs > 0)
        x *= g[None, :]
        res = float(np.abs(x.sum(axis=1) - rows).sum() / total)
        residuals.append(res)
        if res < tol:
            break
    return EiTable(x, rows, cols, sweeps, residuals)


def aggregate_swing(table: EiTable) -> float:
    """(A->B) + (B->A) + half of every off-diagonal cell in the nonvote row or column.

    Summed exactly over the decimal values of the entries, so printed tables
    give the printed answer.
    """
    m = [[Fraction(repr(float(v))) for v in row] for row in table.inner]
    half = Fraction(1, 2)
    total = m[0][1] + m[1][0] + half * (m[0][2] + m[1][2] + m[2][0] + m[2][1])
    return float(total)


def largest_remainder(values: Sequence[float], total: int | None = None) -> list[int]:
    """Round non-negative reals to integers with the given total (default: rounded sum)."""
    vals = [max(0.0, float(v)) for v in values]
    if total is None:
        total = int(round(math.fsum(vals)))
    floors = [math.floor(v) for v in vals]
    short = total - sum(floors)
    order = sorted(range(len(vals)), key=lambda i: (-(vals[i] - floors[i]), i))
    for i in order[:max(short, 0)]:
        floors[i] += 1
    return floors


def voter_types(table: EiTable) -> tuple[float, float, float]:
    """(reliable A, reliable B, swing) for one precinct."""
    return float(table.inner[0, 0]), float(table.inner[1, 1]), aggregate_swing(table)


def cell_from_table(table: EiTable, area: float = 1.0) -> Cell:
    a, b, s = largest_remainder(voter_types(table))
    return Cell.from_votes(a, b, s, area)


ELECTION_COLUMNS = ["id", "a_1", "b_1", "other_1", "a_2", "b_2", "other_2"]
OUTPUT_COLUMNS = ["id", "reliable_a", "reliable_b", "swing_estimate", "party_a", "party_b",
                  "swing", "pop"]


def estimate_swing_csv(in_path, out_path, diag_weight: float = 10.0) -> int:
    """Per-precinct estimates from a two-election CSV; returns the row count."""
    out_rows = []
    with open(in_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ELECTION_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise GraphFormatError(f"missing columns {missing}", in_path, 1)
        for lineno, rec in enumerate(reader, start=2):
            try:
                first = [float(rec[c]) for c in ("a_1", "b_1", "other_1")]
                second = [float(rec[c]) for c in ("a_2", "b_2", "other_2")]
            except ValueError as exc:
                raise GraphFormatError(str(exc), in_path, lineno) from None
            try:
                table = estimate_ei_table(first, second, diag_weight)
            except StructuralError as exc:
                raise GraphFormatError(str(exc), in_path, lineno) from None
            ra, rb, sw = voter_types(table)
            cell = cell_from_table(table)
            out_rows.append([rec["id"], repr(ra), repr(rb), repr(sw), cell.party_a, cell.party_b,
                             cell.swing, cell.pop])
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OUTPUT_COLUMNS)
        w.writerows(out_rows)
    return len(out_rows)
