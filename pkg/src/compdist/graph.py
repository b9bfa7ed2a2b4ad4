"""Cell-adjacency graphs: the immutable state every other module works on."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import StructuralError


def as_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, ``"p/q"`` / decimal string, or float.

    Floats go through their shortest repr so ``0.05`` becomes ``1/20`` rather
    than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


@dataclass(frozen=True, slots=True)
class Cell:
    pop: int
    party_a: int
    party_b: int
    swing: int = 0
    area: float = 1.0

    def __post_init__(self):
        for name in ("pop", "party_a", "party_b", "swing"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise StructuralError(f"cell {name} must be an integer, got {v!r}")
            if v < 0:
                raise StructuralError(f"cell {name} must be non-negative, got {v}")
        if self.area < 0:
            raise StructuralError(f"cell area must be non-negative, got {self.area}")
        if self.pop != self.party_a + self.party_b + self.swing:
            raise StructuralError(
                f"cell pop {self.pop} != party_a + party_b + swing "
                f"({self.party_a} + {self.party_b} + {self.swing})"
            )

    @classmethod
    def from_votes(cls, party_a: int, party_b: int, swing: int = 0, area: float = 1.0) -> Cell:
        return cls(party_a + party_b + swing, party_a, party_b, swing, area)


class CellGraph:
    """Cells plus weighted adjacency (shared boundary lengths).

    Immutable after construction; safe to share between chains. ``grid_shape``
    is set when cells are laid out row-major on a ``rows x cols`` grid.
    """

    def __init__(
        self,
        cells: Sequence[Cell],
        edges: Iterable[tuple[int, int, float]],
        exterior_boundary: Sequence[float] | None = None,
        ids: Sequence[str] | None = None,
        grid_shape: tuple[int, int] | None = None,
        require_connected: bool = True,
    ):
        self.cells: tuple[Cell, ...] = tuple(cells)
        n = len(self.cells)
        if n == 0:
            raise StructuralError("graph has no cells")
        if exterior_boundary is None:
            exterior_boundary = [0.0] * n
        if len(exterior_boundary) != n:
            raise StructuralError("exterior_boundary length does not match cell count")
        if any(x < 0 for x in exterior_boundary):
            raise StructuralError("exterior boundary lengths must be non-negative")
        self.exterior_boundary: tuple[float, ...] = tuple(float(x) for x in exterior_boundary)
        if ids is None:
            ids = [str(i) for i in range(n)]
        if len(ids) != n or len(set(ids)) != n:
            raise StructuralError("node ids must be unique, one per cell")
        self.ids: tuple[str, ...] = tuple(str(i) for i in ids)

        seen = set()
        norm_edges = []
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, length in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise StructuralError(f"edge ({u}, {v}) has an out-of-range endpoint")
            if u == v:
                raise StructuralError(f"self-loop on cell {u}")
            if length < 0:
                raise StructuralError(f"edge ({u}, {v}) has negative length {length}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise StructuralError(f"duplicate edge {key}")
            seen.add(key)
            length = float(length)
            norm_edges.append((u, v, length))
            adj[u].append((v, length))
            adj[v].append((u, length))
        self.edges: tuple[tuple[int, int, float], ...] = tuple(norm_edges)
        self.adjacency: tuple[tuple[tuple[int, float], ...], ...] = tuple(
            tuple(sorted(a)) for a in adj
        )
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(
            tuple(v for v, _ in a) for a in self.adjacency
        )
        if grid_shape is not None:
            rows, cols = grid_shape
            if rows * cols != n:
                raise StructuralError(f"grid shape {grid_shape} does not match {n} cells")
            grid_shape = (int(rows), int(cols))
        self.grid_shape = grid_shape

        self.pop = tuple(c.pop for c in self.cells)
        self.total_pop = sum(self.pop)
        if require_connected and not self.is_connected():
            raise StructuralError("cell graph is not connected")

    def __len__(self):
        return len(self.cells)

    @property
    def n(self) -> int:
        return len(self.cells)

    def __repr__(self):
        return f"CellGraph(n={self.n}, edges={len(self.edges)}, grid_shape={self.grid_shape})"

    def is_connected(self) -> bool:
        return len(self.component_of(0, range(self.n))) == self.n

    def component_of(self, start: int, allowed: Iterable[int]) -> set[int]:
        allowed = set(allowed)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v in allowed and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    def max_degree(self) -> int:
        return max(len(nb) for nb in self.neighbors)

    def is_path(self) -> bool:
        """True when cells 0..n-1 form a path in index order."""
        n = self.n
        if len(self.edges) != n - 1:
            return False
        return all(abs(u - v) == 1 for u, v, _ in self.edges)

    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1 and self.is_connected()

    def with_cells(self, cells: Sequence[Cell]) -> CellGraph:
        """Same topology, different cell data."""
        return CellGraph(cells, self.edges, self.exterior_boundary, self.ids, self.grid_shape)

    def totals(self) -> tuple[int, int, int, int]:
        """(pop, party_a, party_b, swing) summed over all cells."""
        return (
            self.total_pop,
            sum(c.party_a for c in self.cells),
            sum(c.party_b for c in self.cells),
            sum(c.swing for c in self.cells),
        )


def grid_graph(rows: int, cols: int, cells: Sequence[Cell] | None = None) -> CellGraph:
    """Row-major ``rows x cols`` grid of unit squares with rook adjacency."""
    n = rows * cols
    if cells is None:
        cells = [Cell(1, 1, 0)] * n
    edges = []
    exterior = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, 1.0))
            if r + 1 < rows:
                edges.append((i, i + cols, 1.0))
            exterior.append(float((r == 0) + (r == rows - 1) + (c == 0) + (c == cols - 1)))
    return CellGraph(cells, edges, exterior, grid_shape=(rows, cols))


def path_graph(cells: Sequence[Cell]) -> CellGraph:
    """Cells in a line, each a unit square sharing one side with the next."""
    n = len(cells)
    edges = [(i, i + 1, 1.0) for i in range(n - 1)]
    exterior = [4.0 - (i > 0) - (i < n - 1) for i in range(n)]
    return CellGraph(cells, edges, exterior, grid_shape=(1, n))
