import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from compdist.graph import Cell, CellGraph, grid_graph  # noqa: E402


def uniform_grid(rows, cols, a=1, b=1, s=0):
    return grid_graph(rows, cols, [Cell.from_votes(a, b, s)] * (rows * cols))


def polarized_grid(n=12):
    """Left third 80/20 A, right third 20/80, middle 50/50; uniform pop 100."""
    cells = []
    for _ in range(n):
        for c in range(n):
            if c < n // 3:
                cells.append(Cell.from_votes(80, 20))
            elif c >= 2 * n // 3:
                cells.append(Cell.from_votes(20, 80))
            else:
                cells.append(Cell.from_votes(50, 50))
    return grid_graph(n, n, cells)


def random_cell(rng: random.Random, hi=5, swing=True):
    a, b = rng.randint(0, hi), rng.randint(0, hi)
    s = rng.randint(0, hi - 1) if swing else 0
    if a + b + s == 0:
        a = 1
    return Cell.from_votes(a, b, s)


def random_tree(rng: random.Random, n: int, max_degree: int, cells=None) -> CellGraph:
    edges, deg = [], [0] * n
    for v in range(1, n):
        options = [u for u in range(v) if deg[u] < max_degree]
        u = rng.choice(options)
        edges.append((u, v, 1.0))
        deg[u] += 1
        deg[v] += 1
    cells = cells or [random_cell(rng) for _ in range(n)]
    return CellGraph(cells, edges)


@pytest.fixture
def rng():
    return random.Random(12345)


EPS_CHOICES = [Fraction(0), Fraction(1, 20), Fraction(1, 10), Fraction(3, 20)]


# one PASS/FAIL line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
