"""Provenance graph ingestion and normalization.

Input records arrive as line-delimited JSON (one node or edge object per
line).  Ingestion validates them and `normalize` turns the record lists
into the dense internal form everything downstream works on:

* internal node ids 0..V-1 assigned in first-appearance order,
* edges re-indexed canonically by (src, dst, input position), so an edge's
  identity is its position and never needs to be stored,
* per-node adjacency lists sorted ascending (duplicates kept for multi-edges).

Attribute text is treated as opaque bytes; nothing here parses fields.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import DanglingEndpoint, DuplicateId, MalformedRecord


@dataclass(frozen=True)
class NodeRecord:
    external_id: int
    attr: bytes = b""


@dataclass(frozen=True)
class EdgeRecord:
    external_id: int
    src: int
    dst: int
    attr: bytes = b""


@dataclass(frozen=True)
class IdMaps:
    """internal -> external id tables; ``None`` means the identity map."""

    node_external: tuple[int, ...] | None = None
    edge_external: tuple[int, ...] | None = None

    def node_internal(self, external_id: int) -> int | None:
        if self.node_external is None:
            return external_id
        try:
            return self.node_external.index(external_id)
        except ValueError:
            return None


@dataclass
class ProvenanceGraph:
    node_count: int
    edge_count: int
    node_attrs: list[bytes]
    edge_attrs: list[bytes]
    adjacency: list[list[int]]
    id_maps: IdMaps = field(default_factory=IdMaps)

    def __post_init__(self) -> None:
        if len(self.node_attrs) != self.node_count:
            raise ValueError("node_attrs length disagrees with node_count")
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length disagrees with node_count")
        if sum(len(a) for a in self.adjacency) != self.edge_count:
            raise ValueError("adjacency does not account for every edge")

    # Canonical edge id for the k-th successor of node u is offset[u] + k.
    def edge_offsets(self) -> list[int]:
        offsets = [0] * (self.node_count + 1)
        for u, succ in enumerate(self.adjacency):
            offsets[u + 1] = offsets[u] + len(succ)
        return offsets

    def iter_edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield (edge_id, src, dst) in canonical order."""
        eid = 0
        for u, succ in enumerate(self.adjacency):
            for v in succ:
                yield eid, u, v
                eid += 1


def _lines(stream: Iterable[str] | str) -> Iterator[str]:
    if isinstance(stream, str):
        return iter(stream.splitlines())
    return iter(stream)


def parse_input(stream: Iterable[str] | str) -> tuple[list[NodeRecord], list[EdgeRecord]]:
    """Parse line-delimited records into validated node and edge lists.

    Lines starting with ``#`` and blank lines are skipped.  Nodes must be
    declared before an edge uses them; ids must be unique per kind.
    """
    nodes: list[NodeRecord] = []
    edges: list[EdgeRecord] = []
    node_ids: set[int] = set()
    edge_ids: set[int] = set()

    for line_no, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise MalformedRecord(line_no, "record is not an object")

        kind = obj.get("type")
        if kind == "node":
            rid = _require_uint(obj, "id", line_no)
            attr = _require_attr(obj, line_no)
            if rid in node_ids:
                raise DuplicateId("node", rid)
            node_ids.add(rid)
            nodes.append(NodeRecord(rid, attr))
        elif kind == "edge":
            rid = _require_uint(obj, "id", line_no)
            src = _require_uint(obj, "src", line_no)
            dst = _require_uint(obj, "dst", line_no)
            attr = _require_attr(obj, line_no)
            if rid in edge_ids:
                raise DuplicateId("edge", rid)
            edge_ids.add(rid)
            if src not in node_ids:
                raise DanglingEndpoint(rid, src)
            if dst not in node_ids:
                raise DanglingEndpoint(rid, dst)
            edges.append(EdgeRecord(rid, src, dst, attr))
        else:
            raise MalformedRecord(line_no, f"unknown record type {kind!r}")

    return nodes, edges


def _require_uint(obj: dict, key: str, line_no: int) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise MalformedRecord(line_no, f"field {key!r} must be an unsigned integer")
    return value


def _require_attr(obj: dict, line_no: int) -> bytes:
    value = obj.get("attr", "")
    if not isinstance(value, str):
        raise MalformedRecord(line_no, "field 'attr' must be a string")
    return value.encode("utf-8")


def normalize(nodes: list[NodeRecord], edges: list[EdgeRecord]) -> ProvenanceGraph:
    """Build the dense-id internal graph from validated record lists."""
    node_internal: dict[int, int] = {}
    node_attrs: list[bytes] = []
    for rec in nodes:
        node_internal[rec.external_id] = len(node_attrs)
        node_attrs.append(rec.attr)

    # Canonical edge order: (internal src, internal dst, input position).
    keyed = []
    for pos, rec in enumerate(edges):
        if rec.src not in node_internal:
            raise DanglingEndpoint(rec.external_id, rec.src)
        if rec.dst not in node_internal:
            raise DanglingEndpoint(rec.external_id, rec.dst)
        keyed.append((node_internal[rec.src], node_internal[rec.dst], pos, rec))
    keyed.sort(key=lambda item: item[:3])

    adjacency: list[list[int]] = [[] for _ in node_attrs]
    edge_attrs: list[bytes] = []
    edge_external: list[int] = []
    for src, dst, _pos, rec in keyed:
        adjacency[src].append(dst)
        edge_attrs.append(rec.attr)
        edge_external.append(rec.external_id)

    node_external = [rec.external_id for rec in nodes]
    id_maps = IdMaps(
        node_external=None
        if node_external == list(range(len(node_external)))
        else tuple(node_external),
        edge_external=None
        if edge_external == list(range(len(edge_external)))
        else tuple(edge_external),
    )

    return ProvenanceGraph(
        node_count=len(node_attrs),
        edge_count=len(edge_attrs),
        node_attrs=node_attrs,
        edge_attrs=edge_attrs,
        adjacency=adjacency,
        id_maps=id_maps,
    )


def ingest(stream: Iterable[str] | str) -> ProvenanceGraph:
    """parse_input followed by normalize."""
    nodes, edges = parse_input(stream)
    return normalize(nodes, edges)


def reverse_adjacency(graph: ProvenanceGraph) -> list[list[int]]:
    """Per-node sorted predecessor lists (multiplicities preserved)."""
    return reverse_lists(graph.adjacency)


def reverse_lists(adjacency: list[list[int]]) -> list[list[int]]:
    rev: list[list[int]] = [[] for _ in adjacency]
    for u, succ in enumerate(adjacency):
        for v in succ:
            rev[v].append(u)
    for preds in rev:
        preds.sort()
    return rev
