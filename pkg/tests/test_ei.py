import csv
from fractions import Fraction

import numpy as np
import pytest

from compdist.ei import (EiTable, aggregate_swing, cell_from_table, estimate_ei_table, estimate_swing_csv,
                         largest_remainder)
from compdist.errors import GraphFormatError, StructuralError

# published sample precinct table (rows: first election A, B, nonvote; columns: second election)
PRECINCT = [[407.45, 9.24, 71.30],
        [3.55, 1583.69, 73.76],
        [0.00, 272.07, 2713.93]]
PRECINCT_ROWS = [488, 1660, 2986]
PRECINCT_COLS = [410, 1864, 2859]


def test_sample_precinct_swing_value():
    value = aggregate_swing(EiTable.from_inner(PRECINCT))
    assert abs(Fraction(repr(value)) - Fraction("221.36")) <= Fraction("0.005")
    assert Fraction(repr(value)) == Fraction("221.355")


def test_sample_precinct_marginals_reproduced():
    t = estimate_ei_table(PRECINCT_ROWS, PRECINCT_COLS)
    # totals differ by one voter; the second election's nonvote absorbs it
    assert t.col_marginals[2] == 2860
    assert t.is_consistent(1e-6)
    assert (t.inner >= 0).all()


def test_identical_marginals_near_diagonal():
    # the default prior (10) leaves about 14% off the diagonal here; 100 counts as strong
    t = estimate_ei_table([500, 400, 100], [500, 400, 100], diag_weight=100)
    off = t.inner.sum() - np.trace(t.inner)
    assert off < 0.05 * t.inner.sum()
    assert t.is_consistent()


def test_zero_party_and_zero_total():
    t = estimate_ei_table([0, 300, 50], [0, 280, 70])
    assert np.all(t.inner[0, :] == 0) and np.all(t.inner[:, 0] == 0)
    z = estimate_ei_table([0, 0, 0], [0, 0, 0])
    assert np.all(z.inner == 0) and aggregate_swing(z) == 0


def test_bad_marginals():
    with pytest.raises(StructuralError):
        estimate_ei_table([1, 2], [1, 2, 3])
    with pytest.raises(StructuralError):
        estimate_ei_table([1, -2, 3], [1, 2, 3])
    with pytest.raises(StructuralError):
        EiTable.from_inner(np.eye(2))


def test_swing_linear_and_diagonal():
    assert aggregate_swing(EiTable.from_inner(np.diag([5.0, 6.0, 7.0]))) == 0
    base = aggregate_swing(EiTable.from_inner(PRECINCT))
    doubled = aggregate_swing(EiTable.from_inner(np.asarray(PRECINCT) * 2))
    assert doubled == pytest.approx(2 * base, rel=1e-12)


def test_largest_remainder():
    assert largest_remainder([1.5, 1.5, 1.0]) == [2, 1, 1]
    assert largest_remainder([0.2, 0.3, 0.5], total=1) == [0, 0, 1]
    assert sum(largest_remainder([407.45, 1583.69, 221.355])) == round(407.45 + 1583.69 + 221.355)


def test_cell_from_table_keeps_identity():
    c = cell_from_table(EiTable.from_inner(PRECINCT))
    assert c.pop == c.party_a + c.party_b + c.swing
    assert (c.party_a, c.party_b) in {(407, 1584), (408, 1583), (407, 1583), (408, 1584)}


def test_estimate_swing_csv(tmp_path):
    src = tmp_path / "e.csv"
    src.write_text("id,a_1,b_1,other_1,a_2,b_2,other_2\np1,488,1660,2986,410,1864,2859\np2,10,0,5,10,0,5\n")
    out = tmp_path / "o.csv"
    assert estimate_swing_csv(src, out) == 2
    rows = list(csv.DictReader(open(out)))
    assert [r["id"] for r in rows] == ["p1", "p2"]
    for r in rows:
        assert int(r["pop"]) == int(r["party_a"]) + int(r["party_b"]) + int(r["swing"])
    bad = tmp_path / "bad.csv"
    bad.write_text("id,a_1\np,1\n")
    with pytest.raises(GraphFormatError):
        estimate_swing_csv(bad, out)
    bad.write_text("id,a_1,b_1,other_1,a_2,b_2,other_2\np,x,1,1,1,1,1\n")
    with pytest.raises(GraphFormatError) as info:
        estimate_swing_csv(bad, out)
    assert info.value.line == 2
