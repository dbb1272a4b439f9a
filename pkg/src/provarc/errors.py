"""Exception hierarchy for the provarc package.

Every error raised by provarc derives from :class:`ProvarcError` so callers
can catch one type at the CLI boundary.  Input-validation errors carry the
position information needed to point a user at the offending line, stream
offset, or record.
"""
from __future__ import annotations


class ProvarcError(Exception):
    """Base class for all provarc errors."""


# ---- graph ingestion ------------------------------------------------------

class MalformedRecord(ProvarcError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(ProvarcError):
    def __init__(self, kind: str, record_id: int):
        super().__init__(f"duplicate {kind} id {record_id}")
        self.kind = kind
        self.record_id = record_id


class DanglingEndpoint(ProvarcError):
    def __init__(self, edge_id: int, node_id: int):
        super().__init__(f"edge {edge_id} references undeclared node {node_id}")
        self.edge_id = edge_id
        self.node_id = node_id


# ---- symbol stream --------------------------------------------------------

class MalformedStream(ProvarcError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"symbol {position}: {reason}")
        self.position = position
        self.reason = reason


# ---- predictor ------------------------------------------------------------

class EmptyTrainingSet(ProvarcError):
    pass


class BadContextLength(ProvarcError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"context must hold {expected} symbols, got {got}")
        self.expected = expected
        self.got = got


class UnknownModelKind(ProvarcError):
    def __init__(self, kind: int):
        super().__init__(f"unknown model kind byte {kind}")
        self.kind = kind


class CorruptBlob(ProvarcError):
    pass


# ---- calibration ----------------------------------------------------------

class TruncatedTable(ProvarcError):
    pass


class SymbolOutOfRange(ProvarcError):
    def __init__(self, value: int):
        super().__init__(f"corrected symbol {value} outside alphabet 0..12")
        self.value = value


class InconsistentLength(ProvarcError):
    pass


# ---- attribute trees ------------------------------------------------------

class WindowTooSmall(ProvarcError):
    def __init__(self, window: int):
        super().__init__(f"similarity window must be >= 2, got {window}")
        self.window = window


class OpOutOfBounds(ProvarcError):
    def __init__(self, op_index: int, reason: str):
        super().__init__(f"edit op {op_index}: {reason}")
        self.op_index = op_index
        self.reason = reason


class UnknownId(ProvarcError):
    def __init__(self, node_id: int):
        super().__init__(f"no attribute stored for id {node_id}")
        self.node_id = node_id


class CorruptTreeSection(ProvarcError):
    pass


# ---- archive container ----------------------------------------------------

class BadMagic(ProvarcError):
    pass


class UnsupportedVersion(ProvarcError):
    def __init__(self, version: int):
        super().__init__(f"unsupported archive format version {version}")
        self.version = version


class CrcMismatch(ProvarcError):
    pass


class TruncatedSection(ProvarcError):
    pass


# ---- query ----------------------------------------------------------------

class UnknownNode(ProvarcError):
    def __init__(self, node_id: int):
        super().__init__(f"node id {node_id} not present in graph")
        self.node_id = node_id
