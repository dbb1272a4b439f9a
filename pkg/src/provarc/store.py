"""End-to-end store pipeline: graph in, archive bytes plus stats out.

Phases mirror the storage flow: structure vectorization, model training,
calibration, attribute similarity, attribute tree generation.  Each phase
is wall-clock timed and its output size recorded so `store` can print the
same breakdown the stats command reads back from the container.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import attrtree, calibration, predictor, structure
from .archive import ArchiveHeader, write_archive
from .graph import ProvenanceGraph


@dataclass(frozen=True)
class StoreConfig:
    predictor: predictor.PredictorConfig = field(default_factory=predictor.PredictorConfig)
    attr_window: int = 4
    max_dis: int = 60
    include_crc: bool = True


@dataclass
class StatsReport:
    node_count: int = 0
    edge_count: int = 0
    stream_length: int = 0
    prep_s: float = 0.0
    vectorize_s: float = 0.0
    train_s: float = 0.0
    calibrate_s: float = 0.0
    similarity_s: float = 0.0
    tree_s: float = 0.0
    model_bytes: int = 0
    calibration_bytes: int = 0
    node_tree_bytes: int = 0
    edge_tree_bytes: int = 0
    total_bytes: int = 0
    train_accuracy: float = 0.0
    calibration_entries: int = 0
    input_bytes: int | None = None

    @property
    def attr_tree_bytes(self) -> int:
        return self.node_tree_bytes + self.edge_tree_bytes

    @property
    def compression_ratio(self) -> float | None:
        if not self.input_bytes:
            return None
        return self.total_bytes / self.input_bytes

    def kv_lines(self) -> list[str]:
        pairs: list[tuple[str, object]] = [
            ("nodes", self.node_count),
            ("edges", self.edge_count),
            ("stream_length", self.stream_length),
            ("time_prep", f"{self.prep_s:.6f}"),
            ("time_vectorize", f"{self.vectorize_s:.6f}"),
            ("time_train", f"{self.train_s:.6f}"),
            ("time_calibrate", f"{self.calibrate_s:.6f}"),
            ("time_similarity", f"{self.similarity_s:.6f}"),
            ("time_tree", f"{self.tree_s:.6f}"),
            ("model_bytes", self.model_bytes),
            ("calibration_bytes", self.calibration_bytes),
            ("node_tree_bytes", self.node_tree_bytes),
            ("edge_tree_bytes", self.edge_tree_bytes),
            ("total_bytes", self.total_bytes),
            ("train_accuracy", f"{self.train_accuracy:.6f}"),
            ("calibration_entries", self.calibration_entries),
        ]
        if self.input_bytes is not None:
            pairs.append(("input_bytes", self.input_bytes))
            pairs.append(("compression_ratio", f"{self.compression_ratio:.6f}"))
        return [f"{key}={value}" for key, value in pairs]

    def table(self) -> str:
        rows = [
            ("graph", f"{self.node_count} nodes, {self.edge_count} edges, "
                      f"stream {self.stream_length}"),
            ("phase times (s)", f"prep {self.prep_s:.3f}  vectorize {self.vectorize_s:.3f}  "
                                f"train {self.train_s:.3f}  calibrate {self.calibrate_s:.3f}  "
                                f"similarity {self.similarity_s:.3f}  tree {self.tree_s:.3f}"),
            ("model", f"{self.model_bytes} B (train accuracy {self.train_accuracy:.4f})"),
            ("calibration", f"{self.calibration_bytes} B ({self.calibration_entries} entries)"),
            ("node tree", f"{self.node_tree_bytes} B"),
            ("edge tree", f"{self.edge_tree_bytes} B"),
            ("total", f"{self.total_bytes} B"),
        ]
        if self.compression_ratio is not None:
            rows.append(("input", f"{self.input_bytes} B "
                                  f"(ratio {self.compression_ratio:.4f})"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {text}" for name, text in rows)


def store_graph(graph: ProvenanceGraph, config: StoreConfig | None = None,
                input_bytes: int | None = None,
                prep_s: float = 0.0) -> tuple[bytes, StatsReport]:
    """Run the full store pipeline and return (archive bytes, stats)."""
    config = config or StoreConfig()
    report = StatsReport(node_count=graph.node_count, edge_count=graph.edge_count,
                         input_bytes=input_bytes, prep_s=prep_s)

    t0 = time.perf_counter()
    stream = structure.encode_structure(graph.adjacency)
    report.vectorize_s = time.perf_counter() - t0
    report.stream_length = len(stream)

    t0 = time.perf_counter()
    training_set = predictor.make_training_set(stream, config.predictor)
    model = predictor.train(training_set, config.predictor)
    report.train_s = time.perf_counter() - t0
    report.train_accuracy = model.train_accuracy or 0.0

    t0 = time.perf_counter()
    table = calibration.build_table(stream, model)
    table_bytes = calibration.encode_table(table)
    report.calibrate_s = time.perf_counter() - t0
    report.calibration_entries = table.entry_count

    t0 = time.perf_counter()
    node_matrix = attrtree.compute_similarity_matrix(graph.node_attrs, config.attr_window)
    edge_matrix = attrtree.compute_similarity_matrix(graph.edge_attrs, config.attr_window)
    report.similarity_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    node_tree = attrtree.build_attribute_tree(graph.node_attrs, node_matrix, config.max_dis)
    edge_tree = attrtree.build_attribute_tree(graph.edge_attrs, edge_matrix, config.max_dis)
    node_tree_bytes = attrtree.serialize_tree(node_tree)
    edge_tree_bytes = attrtree.serialize_tree(edge_tree)
    report.tree_s = time.perf_counter() - t0

    model_blob = model.to_bytes()
    header = ArchiveHeader(node_count=graph.node_count, edge_count=graph.edge_count,
                           stream_length=len(stream),
                           predictor_window=config.predictor.window,
                           pad_symbol=config.predictor.pad_symbol,
                           attr_window=config.attr_window, max_dis=config.max_dis)
    data = write_archive(model_blob, table_bytes, node_tree_bytes, edge_tree_bytes,
                         header,
                         node_id_map=graph.id_maps.node_external,
                         edge_id_map=graph.id_maps.edge_external,
                         include_crc=config.include_crc)

    report.model_bytes = len(model_blob)
    report.calibration_bytes = len(table_bytes)
    report.node_tree_bytes = len(node_tree_bytes)
    report.edge_tree_bytes = len(edge_tree_bytes)
    report.total_bytes = len(data)
    return data, report
