"""Unsigned LEB128 varints, shared by the calibration, tree, and archive codecs.

7 data bits per byte, least-significant group first, high bit set on every
byte except the last.
"""
from __future__ import annotations

from .errors import TruncatedSection


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError(f"varint value must be non-negative, got {value}")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def encode_uvarint(value: int) -> bytes:
    out = bytearray()
    write_uvarint(out, value)
    return bytes(out)


def read_uvarint(data: bytes, pos: int) -> tuple[int, int]:
    """Decode one varint at ``pos``; returns (value, next position)."""
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise TruncatedSection("varint runs past end of data")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
