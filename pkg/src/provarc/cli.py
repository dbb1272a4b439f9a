"""Command-line front end: store, query, stats, gen.

Exit codes: 0 success, 1 input or IO failure, 2 unknown query target.
"""
from __future__ import annotations

import argparse
import sys
import time

from . import gen as genmod
from . import query as querymod
from .archive import (
    SECTION_CALIBRATION,
    SECTION_CRC32,
    SECTION_EDGE_ID_MAP,
    SECTION_EDGE_TREE,
    SECTION_MODEL,
    SECTION_NODE_ID_MAP,
    SECTION_NODE_TREE,
    read_archive,
    read_section_sizes,
)
from .errors import ProvarcError, UnknownNode
from .graph import ingest
from .predictor import PredictorConfig, model_kind_from_name
from .store import StoreConfig, store_graph

_SECTION_NAMES = {
    SECTION_MODEL: "model",
    SECTION_CALIBRATION: "calibration",
    SECTION_NODE_TREE: "node_tree",
    SECTION_EDGE_TREE: "edge_tree",
    SECTION_NODE_ID_MAP: "node_id_map",
    SECTION_EDGE_ID_MAP: "edge_id_map",
    SECTION_CRC32: "crc32",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provarc",
        description="Lossless provenance-graph archive with trace queries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_store = sub.add_parser("store", help="compress a graph file into an archive")
    p_store.add_argument("input", help="line-delimited node/edge records")
    p_store.add_argument("output", help="archive path to write")
    p_store.add_argument("--window", type=int, default=4,
                         help="attribute similarity window (default 4)")
    p_store.add_argument("--max-dist", type=int, default=60,
                         help="max attribute distance for tree links (default 60)")
    p_store.add_argument("--model", choices=("constant", "tree", "boosted"),
                         default="boosted", help="structure predictor kind")
    p_store.add_argument("--depth", type=int, default=3, help="tree depth cap")
    p_store.add_argument("--estimators", type=int, default=3,
                         help="boosting rounds")
    p_store.add_argument("--predictor-window", type=int, default=8,
                         help="symbols of context fed to the predictor")
    p_store.add_argument("--seed", type=int, default=0, help="predictor seed")

    p_query = sub.add_parser("query", help="trace from a node over an archive")
    p_query.add_argument("archive")
    p_query.add_argument("--node", type=int, required=True,
                         help="start node id (external)")
    p_query.add_argument("--direction", choices=(querymod.FORWARD, querymod.BACKWARD),
                         default=querymod.FORWARD)
    p_query.add_argument("--limit", type=int, default=querymod.DEFAULT_LIMIT,
                         help="stop once nodes+edges reach this count (default 4096)")

    p_stats = sub.add_parser("stats", help="print archive section sizes")
    p_stats.add_argument("archive")

    p_gen = sub.add_parser("gen", help="generate a synthetic graph file")
    p_gen.add_argument("output")
    p_gen.add_argument("--records", type=int, default=10_000,
                       help="total node+edge records (default 10000)")
    p_gen.add_argument("--templates", type=int, default=20,
                       help="distinct attribute templates (default 20)")
    p_gen.add_argument("--mutation-rate", type=float, default=0.05,
                       help="per-parameter mutation probability (default 0.05)")
    p_gen.add_argument("--shuffle", action="store_true",
                       help="scramble record order (destroys locality)")
    p_gen.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_store(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    with open(args.input, "r", encoding="utf-8") as handle:
        text = handle.read()
    graph = ingest(text)
    prep_s = time.perf_counter() - t0

    config = StoreConfig(
        predictor=PredictorConfig(window=args.predictor_window,
                                  model_kind=model_kind_from_name(args.model),
                                  max_depth=args.depth,
                                  n_estimators=args.estimators,
                                  seed=args.seed),
        attr_window=args.window,
        max_dis=args.max_dist,
    )
    data, report = store_graph(graph, config,
                               input_bytes=len(text.encode("utf-8")),
                               prep_s=prep_s)
    with open(args.output, "wb") as handle:
        handle.write(data)

    print(report.table())
    for line in report.kv_lines():
        print(line)
    return 0


def _attr_text(attr: bytes) -> str:
    return attr.decode("utf-8", errors="backslashreplace")


def _cmd_query(args: argparse.Namespace) -> int:
    with open(args.archive, "rb") as handle:
        archive = read_archive(handle.read())
    state = querymod.warm_up(archive)

    start = args.node
    if state.node_id_map is not None:
        try:
            start = state.node_id_map.index(args.node)
        except ValueError:
            raise UnknownNode(args.node) from None

    result = querymod.trace(state, querymod.QueryRequest(
        start=start, direction=args.direction, limit=args.limit))

    node_ext = state.node_id_map
    edge_ext = state.edge_id_map
    for node_id, attr in result.nodes:
        shown = node_ext[node_id] if node_ext else node_id
        print(f"node {shown} {_attr_text(attr)}")
    for edge_id, src, dst, attr in result.edges:
        shown = edge_ext[edge_id] if edge_ext else edge_id
        src_shown = node_ext[src] if node_ext else src
        dst_shown = node_ext[dst] if node_ext else dst
        print(f"edge {shown} {src_shown} {dst_shown} {_attr_text(attr)}")
    print(f"truncated={str(result.truncated).lower()} "
          f"nodes={len(result.nodes)} edges={len(result.edges)}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    with open(args.archive, "rb") as handle:
        data = handle.read()
    header, sizes = read_section_sizes(data)
    print(f"nodes={header.node_count}")
    print(f"edges={header.edge_count}")
    print(f"stream_length={header.stream_length}")
    print(f"predictor_window={header.predictor_window}")
    print(f"attr_window={header.attr_window}")
    print(f"max_dis={header.max_dis}")
    payload_total = sum(size for _, size in sizes)
    framing = 9 * len(sizes)  # per section: id byte + u64 length
    for section_id, size in sizes:
        name = _SECTION_NAMES.get(section_id, f"section_{section_id}")
        print(f"{name}_bytes={size}")
    print(f"header_bytes={len(data) - payload_total - framing}")
    print(f"section_framing_bytes={framing}")
    print(f"total_bytes={len(data)}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    config = genmod.SynthConfig(records=args.records,
                                template_count=args.templates,
                                mutation_rate=args.mutation_rate,
                                shuffle=args.shuffle,
                                seed=args.seed)
    text = genmod.generate(config)
    with open(args.output, "w", encoding="utf-8") as handle:
        handle.write(text)
    print(f"wrote {args.records} records to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"store": _cmd_store, "query": _cmd_query,
                "stats": _cmd_stats, "gen": _cmd_gen}
    try:
        return handlers[args.command](args)
    except UnknownNode as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProvarcError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
