"""Forward/backward provenance traces over a warmed-up archive.

`warm_up` is the one-time "predict, calibrate, decode" pass: it replays
the predictor against the calibration table, decodes the symbol stream
back into adjacency lists, and indexes edges.  Traces afterwards are
plain BFS over in-memory lists and never touch the model again.

Limit semantics: the limit counts nodes plus edges, including the start
node.  Expansion of one frontier node is atomic — all its incident edges
and newly discovered neighbors are admitted together — and the traversal
stops before the next expansion once the running total has reached the
limit.  A query can therefore overshoot the limit by at most the final
expansion, which is what keeps every returned edge's endpoints inside
the returned node set.
"""
from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import attrtree
from .archive import Archive
from .calibration import reconstruct_stream
from .errors import InconsistentLength, UnknownNode
from .structure import decode_structure

FORWARD = "forward"
BACKWARD = "backward"
DEFAULT_LIMIT = 4096


@dataclass(frozen=True)
class QueryRequest:
    start: int
    direction: str = FORWARD
    limit: int = DEFAULT_LIMIT

    def __post_init__(self) -> None:
        if self.direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be forward or backward, got {self.direction!r}")
        if self.limit < 1:
            raise ValueError("limit must be >= 1")


@dataclass
class QueryResult:
    nodes: list[tuple[int, bytes]]
    edges: list[tuple[int, int, int, bytes]]  # (edge id, src, dst, attr)
    truncated: bool

    @property
    def size(self) -> int:
        return len(self.nodes) + len(self.edges)


@dataclass
class WarmState:
    adjacency: list[list[int]]
    edge_offsets: list[int]
    node_tree: attrtree.AttributeTree
    edge_tree: attrtree.AttributeTree
    model: object
    node_id_map: tuple[int, ...] | None = None
    edge_id_map: tuple[int, ...] | None = None
    _reverse: list[list[tuple[int, int]]] | None = None
    node_cache: dict[int, bytes] = field(default_factory=dict)
    edge_cache: dict[int, bytes] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    def node_attr(self, node_id: int) -> bytes:
        return attrtree.recover_attribute(self.node_tree, node_id, self.node_cache)

    def edge_attr(self, edge_id: int) -> bytes:
        return attrtree.recover_attribute(self.edge_tree, edge_id, self.edge_cache)

    def out_edges(self, u: int) -> list[tuple[int, int]]:
        """(successor, edge id) pairs, ascending."""
        base = self.edge_offsets[u]
        return [(v, base + k) for k, v in enumerate(self.adjacency[u])]

    def in_edges(self, u: int) -> list[tuple[int, int]]:
        """(predecessor, edge id) pairs, ascending; built lazily once."""
        if self._reverse is None:
            # Appending while scanning sources in ascending order leaves
            # every reverse list already sorted by (predecessor, edge id).
            rev: list[list[tuple[int, int]]] = [[] for _ in self.adjacency]
            for src, successors in enumerate(self.adjacency):
                base = self.edge_offsets[src]
                for k, dst in enumerate(successors):
                    rev[dst].append((src, base + k))
            self._reverse = rev
        return self._reverse[u]


def warm_up(archive: Archive) -> WarmState:
    """Reconstruct the symbol stream once and decode it into adjacency."""
    stream = reconstruct_stream(archive.model, archive.table)
    adjacency = decode_structure(stream, archive.header.node_count)
    edge_total = sum(len(s) for s in adjacency)
    if edge_total != archive.header.edge_count:
        raise InconsistentLength(
            f"decoded {edge_total} edges, header says {archive.header.edge_count}")
    offsets = [0] * (len(adjacency) + 1)
    for u, successors in enumerate(adjacency):
        offsets[u + 1] = offsets[u] + len(successors)
    return WarmState(adjacency=adjacency, edge_offsets=offsets,
                     node_tree=archive.node_tree, edge_tree=archive.edge_tree,
                     model=archive.model,
                     node_id_map=archive.node_id_map,
                     edge_id_map=archive.edge_id_map)


def trace(state: WarmState, request: QueryRequest) -> QueryResult:
    """BFS over adjacency (forward) or reverse adjacency (backward)."""
    start = request.start
    if not 0 <= start < state.node_count:
        raise UnknownNode(start)
    forward = request.direction == FORWARD

    nodes: list[tuple[int, bytes]] = [(start, state.node_attr(start))]
    edges: list[tuple[int, int, int, bytes]] = []
    visited = {start}
    count = 1
    queue: deque[int] = deque([start])
    truncated = False

    while queue:
        if count >= request.limit:
            truncated = True
            break
        u = queue.popleft()
        for v, eid in (state.out_edges(u) if forward else state.in_edges(u)):
            src, dst = (u, v) if forward else (v, u)
            edges.append((eid, src, dst, state.edge_attr(eid)))
            count += 1
            if v not in visited:
                visited.add(v)
                nodes.append((v, state.node_attr(v)))
                count += 1
                queue.append(v)
    return QueryResult(nodes=nodes, edges=edges, truncated=truncated)


def batch_trace(state: WarmState, starts: list[int], direction: str = FORWARD,
                limit: int = DEFAULT_LIMIT) -> list[QueryResult]:
    """Independent traces, one per start, in input order.

    PROVARC_THREADS > 1 runs them on a thread pool; results are identical
    to the sequential path because traces only read the warm state.
    """
    requests = [QueryRequest(start=s, direction=direction, limit=limit) for s in starts]
    workers = _thread_cap()
    if workers <= 1 or len(requests) <= 1:
        return [trace(state, r) for r in requests]
    if direction == BACKWARD and state.node_count:
        state.in_edges(0)  # build the reverse index once before fanning out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: trace(state, r), requests))


def _thread_cap() -> int:
    raw = os.environ.get("PROVARC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
