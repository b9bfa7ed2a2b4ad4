"""Graph files, assignment files and report emission.

A graph is stored as three files: a small JSON header naming a nodes CSV and
an edges CSV (paths relative to the header).

    header:  {"format_version": 1, "nodes": "x.nodes.csv", "edges": "x.edges.csv",
              "grid_shape": [rows, cols] | null}
    nodes:   id,pop,party_a,party_b,swing,area,exterior_boundary
    edges:   id_u,id_v,shared_length

Rows in the nodes file define cell order. Reals are written with ``repr`` so
they round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .districting import Districting
from .errors import DanglingEdgeError, GraphFormatError, StructuralError
from .graph import Cell, CellGraph
from .metrics import Summary

FORMAT_VERSION = 1
NODE_COLUMNS = ["id", "pop", "party_a", "party_b", "swing", "area", "exterior_boundary"]
EDGE_COLUMNS = ["id_u", "id_v", "shared_length"]


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


def graph_paths(path) -> tuple[Path, Path, Path]:
    """Header, nodes and edges paths for a header path like ``out/state.json``."""
    header = Path(path)
    stem = header.name[:-5] if header.name.endswith(".json") else header.name
    return header, header.with_name(stem + ".nodes.csv"), header.with_name(stem + ".edges.csv")


def save_graph(graph: CellGraph, path) -> Path:
    header, nodes_path, edges_path = graph_paths(path)
    header.parent.mkdir(parents=True, exist_ok=True)
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_COLUMNS)
        for i, c in enumerate(graph.cells):
            w.writerow([graph.ids[i], c.pop, c.party_a, c.party_b, c.swing, _num(c.area),
                        _num(graph.exterior_boundary[i])])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_COLUMNS)
        for u, v, length in graph.edges:
            w.writerow([graph.ids[u], graph.ids[v], _num(length)])
    meta = {
        "format_version": FORMAT_VERSION,
        "nodes": nodes_path.name,
        "edges": edges_path.name,
        "grid_shape": list(graph.grid_shape) if graph.grid_shape else None,
    }
    header.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return header


def _read_rows(path: Path, columns: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head is None:
            raise GraphFormatError("empty file", path, 1)
        head = [h.strip() for h in head]
        missing = [c for c in columns if c not in head]
        if missing:
            raise GraphFormatError(f"missing columns {missing}", path, 1)
        idx = [head.index(c) for c in columns]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) < len(head):
                raise GraphFormatError(f"expected {len(head)} fields, got {len(row)}", path, lineno)
            yield lineno, [row[i].strip() for i in idx]


def _int(text: str, name: str, path, line) -> int:
    try:
        return int(text)
    except ValueError:
        raise GraphFormatError(f"{name} must be an integer, got {text!r}", path, line) from None


def _real(text: str, name: str, path, line) -> float:
    try:
        x = float(text)
    except ValueError:
        raise GraphFormatError(f"{name} must be a number, got {text!r}", path, line) from None
    if not math.isfinite(x):
        raise GraphFormatError(f"{name} must be finite, got {text!r}", path, line)
    return x


def load_graph(path) -> CellGraph:
    header = Path(path)
    try:
        meta = json.loads(header.read_text(encoding="utf-8"))
    except OSError as exc:
        raise GraphFormatError(f"cannot open: {exc.strerror}", header) from exc
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"bad JSON header: {exc.msg}", header, exc.lineno) from exc
    if not isinstance(meta, dict):
        raise GraphFormatError("header must be a JSON object", header)
    if meta.get("format_version") != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported format_version {meta.get('format_version')!r}", header)
    for key in ("nodes", "edges"):
        if not isinstance(meta.get(key), str):
            raise GraphFormatError(f"header field {key!r} must name a file", header)
    nodes_path = header.parent / meta["nodes"]
    edges_path = header.parent / meta["edges"]

    ids: list[str] = []
    index: dict[str, int] = {}
    cells: list[Cell] = []
    exterior: list[float] = []
    for line, (nid, pop, a, b, s, area, ext) in _read_rows(nodes_path, NODE_COLUMNS):
        if nid in index:
            raise GraphFormatError(f"duplicate node id {nid!r}", nodes_path, line)
        vals = [_int(x, name, nodes_path, line)
                for x, name in ((pop, "pop"), (a, "party_a"), (b, "party_b"), (s, "swing"))]
        try:
            cells.append(Cell(*vals, area=_real(area, "area", nodes_path, line)))
        except StructuralError as exc:
            raise GraphFormatError(str(exc), nodes_path, line) from exc
        ext_v = _real(ext, "exterior_boundary", nodes_path, line)
        if ext_v < 0:
            raise GraphFormatError("exterior_boundary must be non-negative", nodes_path, line)
        index[nid] = len(ids)
        ids.append(nid)
        exterior.append(ext_v)
    if not cells:
        raise GraphFormatError("no nodes", nodes_path)

    edges = []
    seen = set()
    for line, (u, v, length) in _read_rows(edges_path, EDGE_COLUMNS):
        for x in (u, v):
            if x not in index:
                raise DanglingEdgeError(x, edges_path, line)
        iu, iv = index[u], index[v]
        if iu == iv:
            raise GraphFormatError(f"self-loop on node {u!r}", edges_path, line)
        key = (min(iu, iv), max(iu, iv))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {u!r}-{v!r}", edges_path, line)
        seen.add(key)
        w = _real(length, "shared_length", edges_path, line)
        if w < 0:
            raise GraphFormatError("shared_length must be non-negative", edges_path, line)
        edges.append((iu, iv, w))

    shape = meta.get("grid_shape")
    try:
        return CellGraph(cells, edges, exterior, ids, tuple(shape) if shape else None)
    except StructuralError as exc:
        raise GraphFormatError(str(exc), header) from exc


def save_assignment(plan: Districting, ids: Sequence[str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "district"])
        for nid, j in zip(ids, plan.assignment):
            w.writerow([nid, j])


def load_assignment(path, ids: Sequence[str]) -> list[int]:
    index = {nid: i for i, nid in enumerate(ids)}
    out: list[int | None] = [None] * len(ids)
    for line, (nid, dist) in _read_rows(Path(path), ["id", "district"]):
        if nid not in index:
            raise GraphFormatError(f"unknown node id {nid!r}", path, line)
        out[index[nid]] = _int(dist, "district", path, line)
    missing = [ids[i] for i, x in enumerate(out) if x is None]
    if missing:
        raise GraphFormatError(f"no district for {len(missing)} node(s), e.g. {missing[0]!r}", path)
    return out  # type: ignore[return-value]


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def emit_report(summary: Summary, plan: Districting, path_prefix, ids: Sequence[str] | None = None,
                extra: dict | None = None) -> list[Path]:
    """Write ``<prefix>.assignment.csv``, ``<prefix>.metrics.json`` and ``<prefix>.shares.csv``.

    Output is byte-stable for fixed inputs.
    """
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    ids = list(ids) if ids is not None else [str(i) for i in range(len(plan.assignment))]
    assign_path = prefix.with_name(prefix.name + ".assignment.csv")
    metrics_path = prefix.with_name(prefix.name + ".metrics.json")
    shares_path = prefix.with_name(prefix.name + ".shares.csv")
    save_assignment(plan, ids, assign_path)

    payload = summary.to_dict()
    payload["districts_count"] = plan.d
    payload["epsilon"] = str(plan.epsilon)
    if extra:
        payload.update(extra)
    metrics_path.write_text(dumps(payload), encoding="utf-8")

    with open(shares_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["district", "a_share", "b_share", "swing_share", "competitive",
                    "outcome_low", "outcome_high"])
        for row in summary.districts:
            lo, hi = row.outcome_range if row.outcome_range else ("", "")
            w.writerow([row.district, repr(row.a_share), repr(row.b_share), repr(row.swing_share),
                        int(row.competitive), repr(lo) if lo != "" else "", repr(hi) if hi != "" else ""])
    return [assign_path, metrics_path, shares_path]
