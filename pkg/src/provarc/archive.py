"""Single-file container for one stored graph.

Layout (all varints unsigned LEB128, all fixed-width integers
little-endian):

    magic "LESS" | version u16 | varints: V, E, stream length, predictor
    window, pad symbol, attribute window, max distance | section count u8
    then sections in ascending id order:
    id u8 | payload length u64 | payload

Section ids: 1 model blob, 2 calibration table, 3 node attribute tree,
4 edge attribute tree, 5 node id map, 6 edge id map, 7 crc32.  Ids 5-7
are optional; the id maps appear only when external ids are not already
dense.  The crc32 payload is a u32 over every byte that precedes the crc
section itself.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from . import attrtree, calibration, predictor
from .errors import BadMagic, CrcMismatch, TruncatedSection, UnsupportedVersion
from .varint import read_uvarint, write_uvarint

MAGIC = b"LESS"
FORMAT_VERSION = 1

SECTION_MODEL = 1
SECTION_CALIBRATION = 2
SECTION_NODE_TREE = 3
SECTION_EDGE_TREE = 4
SECTION_NODE_ID_MAP = 5
SECTION_EDGE_ID_MAP = 6
SECTION_CRC32 = 7

_REQUIRED_SECTIONS = (SECTION_MODEL, SECTION_CALIBRATION,
                      SECTION_NODE_TREE, SECTION_EDGE_TREE)


@dataclass(frozen=True)
class ArchiveHeader:
    node_count: int
    edge_count: int
    stream_length: int
    predictor_window: int
    pad_symbol: int
    attr_window: int
    max_dis: int
    version: int = FORMAT_VERSION


@dataclass
class Archive:
    header: ArchiveHeader
    model: predictor.PredictorModel
    table: calibration.CalibrationTable
    node_tree: attrtree.AttributeTree
    edge_tree: attrtree.AttributeTree
    node_id_map: tuple[int, ...] | None = None
    edge_id_map: tuple[int, ...] | None = None


def _encode_id_map(ids: tuple[int, ...]) -> bytes:
    out = bytearray()
    write_uvarint(out, len(ids))
    for external in ids:
        write_uvarint(out, external)
    return bytes(out)


def _decode_id_map(data: bytes) -> tuple[int, ...]:
    count, pos = read_uvarint(data, 0)
    ids = []
    for _ in range(count):
        external, pos = read_uvarint(data, pos)
        ids.append(external)
    if pos != len(data):
        raise TruncatedSection("trailing bytes after id map")
    return tuple(ids)


def _header_bytes(header: ArchiveHeader, section_count: int) -> bytes:
    out = bytearray(MAGIC)
    out.extend(struct.pack("<H", header.version))
    for value in (header.node_count, header.edge_count, header.stream_length,
                  header.predictor_window, header.pad_symbol,
                  header.attr_window, header.max_dis):
        write_uvarint(out, value)
    out.append(section_count)
    return bytes(out)


def write_archive(model: predictor.PredictorModel | bytes,
                  table: calibration.CalibrationTable | bytes,
                  node_tree: attrtree.AttributeTree | bytes,
                  edge_tree: attrtree.AttributeTree | bytes,
                  header: ArchiveHeader,
                  node_id_map: tuple[int, ...] | None = None,
                  edge_id_map: tuple[int, ...] | None = None,
                  include_crc: bool = True) -> bytes:
    """Serialize one store run; accepts components or their encoded bytes."""
    sections: list[tuple[int, bytes]] = [
        (SECTION_MODEL, model if isinstance(model, bytes) else model.to_bytes()),
        (SECTION_CALIBRATION,
         table if isinstance(table, bytes) else calibration.encode_table(table)),
        (SECTION_NODE_TREE,
         node_tree if isinstance(node_tree, bytes) else attrtree.serialize_tree(node_tree)),
        (SECTION_EDGE_TREE,
         edge_tree if isinstance(edge_tree, bytes) else attrtree.serialize_tree(edge_tree)),
    ]
    if node_id_map is not None:
        sections.append((SECTION_NODE_ID_MAP, _encode_id_map(node_id_map)))
    if edge_id_map is not None:
        sections.append((SECTION_EDGE_ID_MAP, _encode_id_map(edge_id_map)))

    count = len(sections) + (1 if include_crc else 0)
    out = bytearray(_header_bytes(header, count))
    for section_id, payload in sections:
        out.append(section_id)
        out.extend(struct.pack("<Q", len(payload)))
        out.extend(payload)
    if include_crc:
        crc = zlib.crc32(bytes(out)) & 0xFFFFFFFF
        out.append(SECTION_CRC32)
        out.extend(struct.pack("<Q", 4))
        out.extend(struct.pack("<I", crc))
    return bytes(out)


def _parse_header(data: bytes) -> tuple[ArchiveHeader, int, int]:
    if len(data) < len(MAGIC) + 2 or data[:4] != MAGIC:
        raise BadMagic("not an archive: bad magic bytes")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(version)
    pos = 6
    values = []
    for _ in range(7):
        value, pos = read_uvarint(data, pos)
        values.append(value)
    if pos >= len(data):
        raise TruncatedSection("section count byte missing")
    section_count = data[pos]
    pos += 1
    header = ArchiveHeader(node_count=values[0], edge_count=values[1],
                           stream_length=values[2], predictor_window=values[3],
                           pad_symbol=values[4], attr_window=values[5],
                           max_dis=values[6], version=version)
    return header, section_count, pos


def _iter_sections(data: bytes, section_count: int, pos: int):
    prev_id = 0
    for _ in range(section_count):
        if pos + 9 > len(data):
            raise TruncatedSection("section header truncated")
        section_id = data[pos]
        (length,) = struct.unpack_from("<Q", data, pos + 1)
        start = pos + 9
        if start + length > len(data):
            raise TruncatedSection(f"section {section_id} payload truncated")
        if section_id <= prev_id or section_id > SECTION_CRC32:
            raise TruncatedSection(f"section id {section_id} out of order")
        prev_id = section_id
        yield section_id, pos, data[start: start + length]
        pos = start + length
    if pos != len(data):
        raise TruncatedSection(f"{len(data) - pos} trailing bytes after sections")


def read_archive(data: bytes) -> Archive:
    """Exact inverse of write_archive; validates magic, version, and crc."""
    header, section_count, pos = _parse_header(data)
    payloads: dict[int, bytes] = {}
    for section_id, section_start, payload in _iter_sections(data, section_count, pos):
        if section_id == SECTION_CRC32:
            if len(payload) != 4:
                raise TruncatedSection("crc section must hold exactly 4 bytes")
            (stored,) = struct.unpack("<I", payload)
            actual = zlib.crc32(data[:section_start]) & 0xFFFFFFFF
            if stored != actual:
                raise CrcMismatch(f"crc32 {actual:#010x} != stored {stored:#010x}")
        payloads[section_id] = payload

    for required in _REQUIRED_SECTIONS:
        if required not in payloads:
            raise TruncatedSection(f"required section {required} missing")

    table = calibration.decode_table(payloads[SECTION_CALIBRATION])
    node_tree = attrtree.deserialize_tree(payloads[SECTION_NODE_TREE], header.max_dis)
    edge_tree = attrtree.deserialize_tree(payloads[SECTION_EDGE_TREE], header.max_dis)
    model = predictor.deserialize(payloads[SECTION_MODEL], window=header.predictor_window)
    node_map = (_decode_id_map(payloads[SECTION_NODE_ID_MAP])
                if SECTION_NODE_ID_MAP in payloads else None)
    edge_map = (_decode_id_map(payloads[SECTION_EDGE_ID_MAP])
                if SECTION_EDGE_ID_MAP in payloads else None)
    return Archive(header=header, model=model, table=table,
                   node_tree=node_tree, edge_tree=edge_tree,
                   node_id_map=node_map, edge_id_map=edge_map)


def read_section_sizes(data: bytes) -> tuple[ArchiveHeader, list[tuple[int, int]]]:
    """Header plus (section id, payload length) pairs, without decoding
    any payload; lets `stats` report sizes without touching attributes."""
    header, section_count, pos = _parse_header(data)
    sizes = [(section_id, len(payload))
             for section_id, _start, payload in _iter_sections(data, section_count, pos)]
    return header, sizes
