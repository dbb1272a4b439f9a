"""Adjacency-list <-> 13-symbol stream codec.

Three exactly invertible stages:

1. delta coding: each adjacency record ``src -> [s0, s1, ...]`` becomes
   ``src -> [s0 - src, s1 - s0, ...]``.  Only the first delta can be
   negative; later ones are >= 0 because successor lists are sorted.
2. run-length: maximal runs of equal deltas collapse to (count, delta)
   2-tuples.
3. flattening: everything becomes one digit stream over the alphabet
   0..12.  Digits 0-9 spell numbers in decimal; 10 terminates each
   number, 11 terminates each record, a single final 12 terminates the
   stream.  Deltas are zigzag-mapped before digit encoding so the sign
   never needs its own symbol; counts are >= 1 and encoded as-is.

Records with empty successor lists are omitted from the stream; the node
count V travels in the archive header and fills them back in on decode.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedStream

ALPHABET_SIZE = 13
NUMBER_END = 10
RECORD_END = 11
STREAM_END = 12
PAD_SYMBOL = STREAM_END


@dataclass(frozen=True)
class DeltaRecord:
    source: int
    deltas: tuple[int, ...]


@dataclass(frozen=True)
class RunLengthRecord:
    source: int
    tuples: tuple[tuple[int, int], ...]


def zigzag(value: int) -> int:
    return 2 * value if value >= 0 else -2 * value - 1


def unzigzag(value: int) -> int:
    return value // 2 if value % 2 == 0 else -(value + 1) // 2


def delta_encode(source: int, successors: list[int]) -> DeltaRecord:
    deltas = []
    prev = source
    for succ in successors:
        deltas.append(succ - prev)
        prev = succ
    return DeltaRecord(source, tuple(deltas))


def delta_decode(record: DeltaRecord) -> list[int]:
    successors = []
    prev = record.source
    for d in record.deltas:
        prev += d
        successors.append(prev)
    return successors


def run_length(deltas: tuple[int, ...] | list[int]) -> tuple[tuple[int, int], ...]:
    tuples: list[tuple[int, int]] = []
    for d in deltas:
        if tuples and tuples[-1][1] == d:
            tuples[-1] = (tuples[-1][0] + 1, d)
        else:
            tuples.append((1, d))
    return tuple(tuples)


def run_length_expand(tuples: tuple[tuple[int, int], ...]) -> list[int]:
    deltas: list[int] = []
    for count, d in tuples:
        deltas.extend([d] * count)
    return deltas


def _emit_number(out: list[int], value: int) -> None:
    out.extend(int(c) for c in str(value))
    out.append(NUMBER_END)


def flatten(records: list[RunLengthRecord]) -> list[int]:
    """Flatten run-length records (sorted by source) into one symbol stream."""
    out: list[int] = []
    for rec in records:
        _emit_number(out, rec.source)
        for count, d in rec.tuples:
            _emit_number(out, count)
            _emit_number(out, zigzag(d))
        out.append(RECORD_END)
    out.append(STREAM_END)
    return out


def unflatten(stream: list[int]) -> list[RunLengthRecord]:
    """Inverse of :func:`flatten`; rejects ill-formed streams."""
    records: list[RunLengthRecord] = []
    numbers: list[int] = []
    digits: list[int] = []
    ended = False

    for pos, sym in enumerate(stream):
        if ended:
            raise MalformedStream(pos, "symbol after stream end marker")
        if 0 <= sym <= 9:
            digits.append(sym)
        elif sym == NUMBER_END:
            if not digits:
                raise MalformedStream(pos, "empty digit group")
            value = 0
            for d in digits:
                value = value * 10 + d
            numbers.append(value)
            digits.clear()
        elif sym == RECORD_END:
            if digits:
                raise MalformedStream(pos, "digit group missing its terminator")
            records.append(_close_record(numbers, pos))
            numbers.clear()
        elif sym == STREAM_END:
            if digits or numbers:
                raise MalformedStream(pos, "record missing its terminator")
            ended = True
        else:
            raise MalformedStream(pos, f"symbol {sym} outside alphabet 0..12")

    if not ended:
        raise MalformedStream(len(stream), "missing stream end marker")
    return records


def _close_record(numbers: list[int], pos: int) -> RunLengthRecord:
    if not numbers:
        raise MalformedStream(pos, "record holds no source id")
    if len(numbers) % 2 != 1:
        raise MalformedStream(pos, "record holds a count without a delta")
    source = numbers[0]
    tuples = []
    for i in range(1, len(numbers), 2):
        count = numbers[i]
        if count < 1:
            raise MalformedStream(pos, "run count must be positive")
        tuples.append((count, unzigzag(numbers[i + 1])))
    return RunLengthRecord(source, tuple(tuples))


def encode_structure(adjacency: list[list[int]]) -> list[int]:
    """Full pipeline: adjacency lists -> delta -> run-length -> symbols."""
    records = []
    for source, successors in enumerate(adjacency):
        if not successors:
            continue
        deltas = delta_encode(source, successors).deltas
        records.append(RunLengthRecord(source, run_length(deltas)))
    return flatten(records)


def decode_structure(stream: list[int], node_count: int) -> list[list[int]]:
    """Inverse of :func:`encode_structure` given the node count."""
    adjacency: list[list[int]] = [[] for _ in range(node_count)]
    prev_source = -1
    for rec in unflatten(stream):
        if rec.source <= prev_source:
            raise MalformedStream(0, "record source ids not strictly increasing")
        if rec.source >= node_count:
            raise MalformedStream(0, f"source id {rec.source} >= node count {node_count}")
        prev_source = rec.source
        successors = delta_decode(DeltaRecord(rec.source, tuple(run_length_expand(rec.tuples))))
        for succ in successors:
            if succ < 0 or succ >= node_count:
                raise MalformedStream(0, f"successor id {succ} outside 0..{node_count - 1}")
        adjacency[rec.source] = successors
    return adjacency
