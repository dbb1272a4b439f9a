"""Minimum attribute tree: lossless edit-op storage for attribute corpora.

Neighboring log attributes tend to differ in a handful of parameter
bytes, so the corpus is organized as a forest where each node stores only
the edit operations that turn its parent's string into its own.  Pair
selection runs on cheap byte-histogram Manhattan distances inside a
sliding window (an upper-bound proxy for edit distance, never a source of
error: a bad pairing only costs bytes), a minimum spanning tree picks the
cheapest links, and links costlier than ``max_dis`` fall back to storing
the string verbatim as a self-root.

Edit operations are derived from a unit-cost Levenshtein backtrace and
applied against the parent string in descending-position order, so stored
positions never shift.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CorruptTreeSection,
    OpOutOfBounds,
    TruncatedSection,
    UnknownId,
    WindowTooSmall,
)
from .varint import read_uvarint, write_uvarint

HISTOGRAM_SIZE = 256


# ---------------------------------------------------------------------------
# byte histograms and windowed similarity


def bow_encode(s: bytes) -> np.ndarray:
    """Per-byte occurrence counts, shape (256,)."""
    return np.bincount(np.frombuffer(s, dtype=np.uint8), minlength=HISTOGRAM_SIZE)


def manhattan(p: np.ndarray, q: np.ndarray) -> int:
    return int(np.abs(p - q).sum())


@dataclass
class SimilarityMatrix:
    """Banded distance matrix: cell (i, j-1) holds d(S[i], S[i+j])."""

    corpus_size: int
    window: int
    dist: np.ndarray  # (N, window-1) float64, +inf where i+j is out of range

    def pair_distance(self, i: int, j: int) -> float:
        return float(self.dist[i, j - i - 1])


def _histograms(corpus: Sequence[bytes]) -> np.ndarray:
    n = len(corpus)
    if n == 0:
        return np.zeros((0, HISTOGRAM_SIZE), dtype=np.int64)
    lengths = np.fromiter((len(s) for s in corpus), dtype=np.int64, count=n)
    joined = np.frombuffer(b"".join(corpus), dtype=np.uint8).astype(np.int64)
    rows = np.repeat(np.arange(n), lengths)
    flat = np.bincount(rows * HISTOGRAM_SIZE + joined, minlength=n * HISTOGRAM_SIZE)
    return flat.reshape(n, HISTOGRAM_SIZE)


def compute_similarity_matrix(corpus: Sequence[bytes], window: int) -> SimilarityMatrix:
    """Distances from each string to its next window-1 neighbors."""
    if window < 2:
        raise WindowTooSmall(window)
    n = len(corpus)
    hist = _histograms(corpus)
    dist = np.full((n, window - 1), np.inf)
    for j in range(1, window):
        if n > j:
            dist[: n - j, j - 1] = np.abs(hist[: n - j] - hist[j:]).sum(axis=1)
    return SimilarityMatrix(corpus_size=n, window=window, dist=dist)


# ---------------------------------------------------------------------------
# minimum spanning tree over the band graph


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def build_mst(matrix: SimilarityMatrix) -> list[tuple[int, int, float]]:
    """Kruskal over the finite band edges, returned as oriented
    (parent, child, distance) rows sorted by child id.

    Each component is rooted at its smallest index; equal-weight edges are
    taken in (weight, min endpoint, max endpoint) order, so the result is
    deterministic.
    """
    n = matrix.corpus_size
    if n <= 1:
        return []

    weights, lows, highs = [], [], []
    for j in range(1, matrix.window):
        if n <= j:
            break
        col = matrix.dist[: n - j, j - 1]
        weights.append(col)
        lows.append(np.arange(n - j))
        highs.append(np.arange(j, n))
    w = np.concatenate(weights)
    lo = np.concatenate(lows)
    hi = np.concatenate(highs)
    order = np.lexsort((hi, lo, w))

    uf = _UnionFind(n)
    chosen: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    taken = 0
    for idx in order:
        a, b = int(lo[idx]), int(hi[idx])
        if uf.union(a, b):
            dist = float(w[idx])
            chosen[a].append((b, dist))
            chosen[b].append((a, dist))
            taken += 1
            if taken == n - 1:
                break

    # Orient away from the smallest index of each component.
    oriented: list[tuple[int, int, float]] = []
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            for v, dist in chosen[u]:
                if not seen[v]:
                    seen[v] = True
                    oriented.append((u, v, dist))
                    stack.append(v)
    oriented.sort(key=lambda e: e[1])
    return oriented


# ---------------------------------------------------------------------------
# edit operations


@dataclass(frozen=True)
class Insertion:
    position: int
    text: bytes


@dataclass(frozen=True)
class Deletion:
    start: int
    stop: int  # inclusive


@dataclass(frozen=True)
class Substitution:
    position: int
    text: bytes


EditOp = Insertion | Deletion | Substitution


def _edit_matrix(parent: bytes, child: bytes) -> np.ndarray:
    """Unit-cost Levenshtein DP table, (len(parent)+1) x (len(child)+1)."""
    n, m = len(parent), len(child)
    p = np.frombuffer(parent, dtype=np.uint8)
    c = np.frombuffer(child, dtype=np.uint8)
    d = np.empty((n + 1, m + 1), dtype=np.int32)
    d[0] = np.arange(m + 1)
    cols = np.arange(m + 1)
    for i in range(1, n + 1):
        prev = d[i - 1]
        t = np.empty(m + 1, dtype=np.int32)
        t[0] = i
        if m:
            cost = (p[i - 1] != c).astype(np.int32)
            t[1:] = np.minimum(prev[1:] + 1, prev[:-1] + cost)
        # row[j] = min(t[j], row[j-1] + 1) solved as a prefix scan
        d[i] = np.minimum.accumulate(t - cols) + cols
    return d


def get_edit_ops(parent: bytes, child: bytes) -> list[EditOp]:
    """Ops that rewrite parent into child, merged into runs and ordered by
    descending position against the original parent string."""
    d = _edit_matrix(parent, child)
    i, j = len(parent), len(child)

    ops: list[EditOp] = []
    kind = ""  # pending run: "ins" | "del" | "sub"
    run_pos = 0
    run_stop = 0
    run_chars: list[int] = []

    def flush() -> None:
        nonlocal kind
        if kind == "ins":
            ops.append(Insertion(run_pos, bytes(reversed(run_chars))))
        elif kind == "del":
            ops.append(Deletion(run_pos, run_stop))
        elif kind == "sub":
            ops.append(Substitution(run_pos, bytes(reversed(run_chars))))
        kind = ""

    def emit(new_kind: str, pos: int, char: int | None) -> None:
        nonlocal kind, run_pos, run_stop, run_chars
        if kind == new_kind and (
            (new_kind == "ins" and pos == run_pos)
            or (new_kind in ("del", "sub") and pos == run_pos - 1)
        ):
            run_pos = pos if new_kind != "ins" else run_pos
            if char is not None:
                run_chars.append(char)
            return
        flush()
        kind = new_kind
        run_pos = pos
        run_stop = pos
        run_chars = [] if char is None else [char]

    while i > 0 or j > 0:
        here = d[i, j]
        if i > 0 and j > 0 and parent[i - 1] == child[j - 1] and here == d[i - 1, j - 1]:
            flush()
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and here == d[i - 1, j - 1] + 1:
            emit("sub", i - 1, child[j - 1])
            i -= 1
            j -= 1
        elif i > 0 and here == d[i - 1, j] + 1:
            emit("del", i - 1, None)
            i -= 1
        else:
            emit("ins", i, child[j - 1])
            j -= 1
    flush()
    return ops


def edit_cost(ops: Sequence[EditOp]) -> int:
    """Unit edits implied by an op list (equals the Levenshtein distance)."""
    total = 0
    for op in ops:
        if isinstance(op, Deletion):
            total += op.stop - op.start + 1
        else:
            total += len(op.text)
    return total


def apply_edit_ops(base: bytes, ops: Sequence[EditOp]) -> bytes:
    out = base
    for index, op in enumerate(ops):
        if isinstance(op, Insertion):
            if not 0 <= op.position <= len(out):
                raise OpOutOfBounds(index, f"insert at {op.position} in {len(out)}-byte string")
            out = out[: op.position] + op.text + out[op.position:]
        elif isinstance(op, Deletion):
            if not 0 <= op.start <= op.stop < len(out):
                raise OpOutOfBounds(
                    index, f"delete [{op.start},{op.stop}] in {len(out)}-byte string")
            out = out[: op.start] + out[op.stop + 1:]
        elif isinstance(op, Substitution):
            if not 0 <= op.position <= len(out) - len(op.text):
                raise OpOutOfBounds(
                    index, f"substitute {len(op.text)} bytes at {op.position} "
                           f"in {len(out)}-byte string")
            out = out[: op.position] + op.text + out[op.position + len(op.text):]
        else:
            raise OpOutOfBounds(index, f"unknown op {op!r}")
    return out


# ---------------------------------------------------------------------------
# the attribute tree itself


@dataclass(frozen=True)
class AttributeTreeNode:
    parent: int
    id: int
    ops: tuple[EditOp, ...]

    @property
    def is_root(self) -> bool:
        return self.parent == self.id


@dataclass
class AttributeTree:
    nodes: list[AttributeTreeNode]  # index == id
    max_dis: int

    def __len__(self) -> int:
        return len(self.nodes)


def _self_root(index: int, text: bytes) -> AttributeTreeNode:
    ops = (Insertion(0, text),) if text else ()
    return AttributeTreeNode(parent=index, id=index, ops=ops)


def build_attribute_tree(corpus: Sequence[bytes], matrix: SimilarityMatrix,
                         max_dis: int) -> AttributeTree:
    """Keep MST links within max_dis as edit-op records; everything else
    (component roots included) is stored verbatim as a self-root."""
    n = len(corpus)
    slots: list[AttributeTreeNode | None] = [None] * n
    for parent, child, dist in build_mst(matrix):
        if dist <= max_dis:
            ops = tuple(get_edit_ops(corpus[parent], corpus[child]))
            slots[child] = AttributeTreeNode(parent=parent, id=child, ops=ops)
    nodes = [slot if slot is not None else _self_root(i, corpus[i])
             for i, slot in enumerate(slots)]
    return AttributeTree(nodes=nodes, max_dis=max_dis)


def recover_attribute(tree: AttributeTree, node_id: int,
                      cache: dict[int, bytes] | None = None) -> bytes:
    """Walk up to the root, then apply each node's ops downward.

    An optional cache memoizes recovered ancestors; results are identical
    with or without it.
    """
    if not 0 <= node_id < len(tree.nodes):
        raise UnknownId(node_id)

    chain: list[int] = []
    current = node_id
    base = b""
    while True:
        if cache is not None and current in cache:
            base = cache[current]
            break
        node = tree.nodes[current]
        chain.append(current)
        if node.is_root:
            break
        if len(chain) > len(tree.nodes):
            raise CorruptTreeSection("parent links form a cycle")
        current = node.parent
        if not 0 <= current < len(tree.nodes):
            raise CorruptTreeSection(f"parent id {current} out of range")

    for nid in reversed(chain):
        base = apply_edit_ops(base, tree.nodes[nid].ops)
        if cache is not None:
            cache[nid] = base
    return base


# ---------------------------------------------------------------------------
# serialization (tree section format)

_KIND_INSERT = 0
_KIND_DELETE = 1
_KIND_SUBSTITUTE = 2


def serialize_tree(tree: AttributeTree) -> bytes:
    out = bytearray()
    write_uvarint(out, len(tree.nodes))
    for node in tree.nodes:
        write_uvarint(out, node.parent)
        write_uvarint(out, len(node.ops))
        for op in node.ops:
            if isinstance(op, Insertion):
                out.append(_KIND_INSERT)
                write_uvarint(out, op.position)
                write_uvarint(out, len(op.text))
                out.extend(op.text)
            elif isinstance(op, Deletion):
                out.append(_KIND_DELETE)
                write_uvarint(out, op.start)
                write_uvarint(out, op.stop)
            else:
                out.append(_KIND_SUBSTITUTE)
                write_uvarint(out, op.position)
                write_uvarint(out, len(op.text))
                out.extend(op.text)
    return bytes(out)


def deserialize_tree(data: bytes, max_dis: int = 0) -> AttributeTree:
    try:
        return _deserialize_tree(data, max_dis)
    except TruncatedSection as exc:
        raise CorruptTreeSection(str(exc)) from exc


def _deserialize_tree(data: bytes, max_dis: int) -> AttributeTree:
    count, pos = read_uvarint(data, 0)
    nodes: list[AttributeTreeNode] = []
    for node_id in range(count):
        parent, pos = read_uvarint(data, pos)
        if parent >= count:
            raise CorruptTreeSection(f"parent id {parent} out of range 0..{count - 1}")
        op_count, pos = read_uvarint(data, pos)
        ops: list[EditOp] = []
        for _ in range(op_count):
            if pos >= len(data):
                raise CorruptTreeSection("op kind byte missing")
            op_kind = data[pos]
            pos += 1
            if op_kind == _KIND_INSERT or op_kind == _KIND_SUBSTITUTE:
                position, pos = read_uvarint(data, pos)
                length, pos = read_uvarint(data, pos)
                if pos + length > len(data):
                    raise CorruptTreeSection("op text truncated")
                text = data[pos: pos + length]
                pos += length
                ops.append(Insertion(position, text) if op_kind == _KIND_INSERT
                           else Substitution(position, text))
            elif op_kind == _KIND_DELETE:
                start, pos = read_uvarint(data, pos)
                stop, pos = read_uvarint(data, pos)
                ops.append(Deletion(start, stop))
            else:
                raise CorruptTreeSection(f"unknown op kind {op_kind}")
        nodes.append(AttributeTreeNode(parent=parent, id=node_id, ops=tuple(ops)))
    if pos != len(data):
        raise CorruptTreeSection(f"{len(data) - pos} trailing bytes after tree")
    return AttributeTree(nodes=nodes, max_dis=max_dis)
