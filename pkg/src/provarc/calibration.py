"""Mismatch table that makes any deterministic predictor a lossless codec.

Storage walks the true symbol stream once, predicting each position from
the true preceding window (teacher forcing), and records every miss as a
(gap, correct symbol) entry.  Reconstruction replays the same walk: the
context is always the corrected output so far, which by construction
equals the original stream, so both phases see identical contexts and the
table repairs exactly the positions that need it.

Gap encoding: a gap of 0..127 takes one byte with the high bit clear;
anything larger takes three bytes, the first carrying the high 7 of a
23-bit value with the flag bit set, then the low 16 big-endian.  The
corrected symbol always follows as one byte.  Gaps that cannot fit 23
bits are split by no-op entries whose symbol equals the prediction at
that spot, which leaves reconstruction unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InconsistentLength, SymbolOutOfRange, TruncatedTable, TruncatedSection
from .structure import ALPHABET_SIZE
from .varint import read_uvarint, write_uvarint

MAX_DELTA = (1 << 23) - 1


@dataclass(frozen=True)
class CalibrationEntry:
    delta: int  # gap from the previous corrected position (first: from 0)
    value: int  # the correct symbol at that position


@dataclass
class CalibrationTable:
    stream_length: int
    entries: list[CalibrationEntry]

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def positions(self) -> list[int]:
        out = []
        pos = 0
        for entry in self.entries:
            pos += entry.delta
            out.append(pos)
        return out


def _contexts(stream: np.ndarray, window: int, pad: int) -> np.ndarray:
    padded = np.full(len(stream) + window, pad, dtype=np.uint8)
    padded[window:] = stream
    if window == 0:
        return np.empty((len(stream), 0), dtype=np.uint8)
    return np.lib.stride_tricks.sliding_window_view(padded, window)[: len(stream)]


def build_table(stream: Sequence[int], model) -> CalibrationTable:
    """Record every teacher-forced prediction miss as a (gap, symbol) entry."""
    arr = np.asarray(stream, dtype=np.uint8)
    window = model.window
    pad = getattr(model, "pad_symbol", 12)

    if hasattr(model, "predict_many") and len(arr):
        predicted = np.asarray(model.predict_many(_contexts(arr, window, pad)))
        miss = np.flatnonzero(predicted != arr)
    else:
        context = [pad] * window
        miss_list = []
        for i, true_symbol in enumerate(arr):
            if model.predict(tuple(context)) != true_symbol:
                miss_list.append(i)
            if window:
                context.pop(0)
                context.append(int(true_symbol))
        miss = np.asarray(miss_list, dtype=np.int64)

    entries: list[CalibrationEntry] = []
    prev = 0
    for pos in miss:
        gap = int(pos) - prev
        while gap > MAX_DELTA:
            # No-op splitter: the symbol matches the prediction there.
            prev += MAX_DELTA
            entries.append(CalibrationEntry(MAX_DELTA, int(arr[prev])))
            gap -= MAX_DELTA
        entries.append(CalibrationEntry(gap, int(arr[pos])))
        prev = int(pos)
    return CalibrationTable(stream_length=len(arr), entries=entries)


def encode_table(table: CalibrationTable) -> bytes:
    out = bytearray()
    write_uvarint(out, table.stream_length)
    write_uvarint(out, table.entry_count)
    for entry in table.entries:
        if entry.delta <= 127:
            out.append(entry.delta)
        else:
            if entry.delta > MAX_DELTA:
                raise ValueError(f"entry gap {entry.delta} exceeds 23 bits")
            out.append(0x80 | (entry.delta >> 16))
            out.append((entry.delta >> 8) & 0xFF)
            out.append(entry.delta & 0xFF)
        out.append(entry.value)
    return bytes(out)


def decode_table(data: bytes) -> CalibrationTable:
    try:
        stream_length, pos = read_uvarint(data, 0)
        entry_count, pos = read_uvarint(data, pos)
    except TruncatedSection as exc:
        raise TruncatedTable(str(exc)) from exc

    entries: list[CalibrationEntry] = []
    for _ in range(entry_count):
        if pos >= len(data):
            raise TruncatedTable("entry gap missing")
        first = data[pos]
        pos += 1
        if first & 0x80:
            if pos + 2 > len(data):
                raise TruncatedTable("three-byte gap truncated")
            delta = ((first & 0x7F) << 16) | (data[pos] << 8) | data[pos + 1]
            pos += 2
        else:
            delta = first
        if pos >= len(data):
            raise TruncatedTable("entry symbol missing")
        value = data[pos]
        pos += 1
        if value >= ALPHABET_SIZE:
            raise SymbolOutOfRange(value)
        entries.append(CalibrationEntry(delta, value))
    if pos != len(data):
        raise TruncatedTable(f"{len(data) - pos} trailing bytes after table")
    return CalibrationTable(stream_length=stream_length, entries=entries)


def reconstruct_stream(model, table: CalibrationTable) -> list[int]:
    """Free-run the model for stream_length steps, applying corrections.

    Contexts repeat heavily in practice, so single predictions go through
    a small memo keyed on the context tuple; the model stays pure.
    """
    length = table.stream_length
    window = model.window
    pad = getattr(model, "pad_symbol", 12)

    corrections: dict[int, int] = {}
    pos = 0
    for entry in table.entries:
        pos += entry.delta
        if pos >= length:
            raise InconsistentLength(
                f"correction at position {pos} beyond stream length {length}")
        corrections[pos] = entry.value

    out: list[int] = []
    context = [pad] * window
    memo: dict[tuple[int, ...], int] = {}
    for i in range(length):
        key = tuple(context)
        predicted = memo.get(key)
        if predicted is None:
            predicted = int(model.predict(key))
            if len(memo) < 1 << 20:
                memo[key] = predicted
        symbol = corrections.get(i, predicted)
        out.append(symbol)
        if window:
            context.pop(0)
            context.append(symbol)
    return out
