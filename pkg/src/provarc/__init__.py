"""provarc: lossless provenance-graph archive with trace queries.

Store side: the graph structure is flattened into a 13-symbol stream, a
small deterministic classifier learns to predict it, and a calibration
table records every miss so reconstruction is exact for any model.
Attributes are stored as minimum attribute trees of edit operations.
Query side: one warm-up reconstructs the structure, then forward and
backward BFS traces resolve attributes on demand.
"""
from .archive import Archive, ArchiveHeader, read_archive, read_section_sizes, write_archive
from .attrtree import (
    AttributeTree,
    AttributeTreeNode,
    Deletion,
    Insertion,
    SimilarityMatrix,
    Substitution,
    apply_edit_ops,
    bow_encode,
    build_attribute_tree,
    build_mst,
    compute_similarity_matrix,
    get_edit_ops,
    manhattan,
    recover_attribute,
    serialize_tree,
    deserialize_tree,
)
from .calibration import (
    CalibrationEntry,
    CalibrationTable,
    build_table,
    decode_table,
    encode_table,
    reconstruct_stream,
)
from .errors import ProvarcError
from .gen import SynthConfig, generate
from .graph import (
    EdgeRecord,
    IdMaps,
    NodeRecord,
    ProvenanceGraph,
    ingest,
    normalize,
    parse_input,
    reverse_adjacency,
)
from .predictor import (
    ModelKind,
    PredictorConfig,
    TrainingSet,
    deserialize,
    make_training_set,
    serialize,
    train,
)
from .query import QueryRequest, QueryResult, WarmState, batch_trace, trace, warm_up
from .store import StatsReport, StoreConfig, store_graph
from .structure import decode_structure, encode_structure

__version__ = "0.1.0"
