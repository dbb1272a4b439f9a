"""Next-symbol predictors for the structure stream.

A predictor is any object with a ``window`` attribute and a deterministic
``predict(context) -> symbol`` where ``context`` holds the previous
``window`` symbols (left-padded with the pad symbol at the start of the
stream).  Prediction accuracy only affects archive size, never
correctness: the calibration table repairs every mismatch.

Three kinds ship, all trained and evaluated with exhaustive deterministic
split search (no sampling, so a given training set always yields the same
model and the stored seed is only a format hook):

* ``constant`` predicts the majority training label, always.
* ``decision_tree`` is a single depth-limited CART classifier (gini).
* ``boosted_trees`` is multiclass gradient boosting with a softmax
  objective: per round, one depth-limited regression tree per observed
  class fits the logit gradient, with second-order leaf weights.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import (
    BadContextLength,
    CorruptBlob,
    EmptyTrainingSet,
    TruncatedSection,
    UnknownModelKind,
)
from .structure import ALPHABET_SIZE, PAD_SYMBOL
from .varint import read_uvarint, write_uvarint

# Boosting constants; folded into stored leaf values, so not serialized.
_LEARNING_RATE = 0.3
_L2_REG = 1.0


class ModelKind(IntEnum):
    CONSTANT = 0
    DECISION_TREE = 1
    BOOSTED_TREES = 2


_KIND_NAMES = {"constant": ModelKind.CONSTANT,
               "tree": ModelKind.DECISION_TREE,
               "boosted": ModelKind.BOOSTED_TREES}


def model_kind_from_name(name: str) -> ModelKind:
    try:
        return _KIND_NAMES[name]
    except KeyError:
        raise ValueError(f"unknown model name {name!r}") from None


@dataclass(frozen=True)
class PredictorConfig:
    window: int = 8
    model_kind: ModelKind = ModelKind.BOOSTED_TREES
    max_depth: int = 3
    n_estimators: int = 3
    pad_symbol: int = PAD_SYMBOL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.max_depth < 1 or self.n_estimators < 1:
            raise ValueError("max_depth and n_estimators must be >= 1")


@dataclass
class TrainingSet:
    features: np.ndarray  # (rows, window) uint8
    labels: np.ndarray  # (rows,) uint8

    def __len__(self) -> int:
        return len(self.labels)


def make_training_set(stream: Sequence[int], config: PredictorConfig) -> TrainingSet:
    """Row i = the window preceding position i (padded), label i = stream[i]."""
    length = len(stream)
    w = config.window
    padded = np.full(length + w, config.pad_symbol, dtype=np.uint8)
    padded[w:] = np.asarray(stream, dtype=np.uint8)
    if length:
        features = np.lib.stride_tricks.sliding_window_view(padded, w)[:length].copy()
    else:
        features = np.empty((0, w), dtype=np.uint8)
    return TrainingSet(features=features, labels=padded[w:].copy())


# ---------------------------------------------------------------------------
# flat tree storage shared by both tree kinds


class _Tree:
    """Depth-limited binary tree over integer features.

    Parallel plain-list storage keeps single-row traversal cheap; numpy
    mirrors are built once for batch application.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "_np")

    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self._np: tuple[np.ndarray, ...] | None = None

    def add_leaf(self, value: float) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return idx

    def add_split(self, feature: int, threshold: int) -> int:
        idx = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return idx

    def apply_row(self, row: Sequence[int]) -> float:
        node = 0
        feature = self.feature
        while feature[node] >= 0:
            if row[feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.value[node]

    def apply_batch(self, rows: np.ndarray) -> np.ndarray:
        if self._np is None:
            self._np = (
                np.asarray(self.feature, dtype=np.int64),
                np.asarray(self.threshold, dtype=np.int64),
                np.asarray(self.left, dtype=np.int64),
                np.asarray(self.right, dtype=np.int64),
                np.asarray(self.value, dtype=np.float64),
            )
        feature, threshold, left, right, value = self._np
        idx = np.zeros(len(rows), dtype=np.int64)
        while True:
            feat = feature[idx]
            active = feat >= 0
            if not active.any():
                break
            sub = idx[active]
            go_left = rows[active, feat[active]] <= threshold[sub]
            idx[active] = np.where(go_left, left[sub], right[sub])
        return value[idx]

    def write(self, out: bytearray) -> None:
        write_uvarint(out, len(self.feature))
        for i in range(len(self.feature)):
            if self.feature[i] < 0:
                out.append(0)
                out.extend(struct.pack("<d", self.value[i]))
            else:
                out.append(1)
                write_uvarint(out, self.feature[i])
                out.append(self.threshold[i])
                write_uvarint(out, self.left[i])
                write_uvarint(out, self.right[i])

    @classmethod
    def read(cls, data: bytes, pos: int) -> tuple["_Tree", int]:
        tree = cls()
        count, pos = read_uvarint(data, pos)
        for _ in range(count):
            if pos >= len(data):
                raise CorruptBlob("tree nodes truncated")
            tag = data[pos]
            pos += 1
            if tag == 0:
                if pos + 8 > len(data):
                    raise CorruptBlob("leaf value truncated")
                (value,) = struct.unpack_from("<d", data, pos)
                pos += 8
                tree.add_leaf(value)
            elif tag == 1:
                feature, pos = read_uvarint(data, pos)
                if pos >= len(data):
                    raise CorruptBlob("split threshold truncated")
                threshold = data[pos]
                pos += 1
                left, pos = read_uvarint(data, pos)
                right, pos = read_uvarint(data, pos)
                idx = tree.add_split(feature, threshold)
                tree.left[idx] = left
                tree.right[idx] = right
            else:
                raise CorruptBlob(f"unknown tree node tag {tag}")
        return tree, pos


def _fit_regression_tree(x: np.ndarray, grad: np.ndarray, hess: np.ndarray,
                         max_depth: int) -> _Tree:
    """Second-order regression tree: split gain and leaf weights use
    sum(grad)/sum(hess) with an L2 term, scanning every (feature,
    threshold) pair so the fit is deterministic."""
    tree = _Tree()
    n_features = x.shape[1]

    def leaf_weight(g: float, h: float) -> float:
        return -_LEARNING_RATE * g / (h + _L2_REG)

    def build(rows: np.ndarray, depth: int) -> int:
        g_total = float(grad[rows].sum())
        h_total = float(hess[rows].sum())
        if depth >= max_depth or len(rows) < 2:
            return tree.add_leaf(leaf_weight(g_total, h_total))

        base = g_total * g_total / (h_total + _L2_REG)
        best_gain = 0.0
        best: tuple[int, int] | None = None
        xs = x[rows]
        for f in range(n_features):
            col = xs[:, f]
            gb = np.bincount(col, weights=grad[rows], minlength=ALPHABET_SIZE)
            hb = np.bincount(col, weights=hess[rows], minlength=ALPHABET_SIZE)
            cb = np.bincount(col, minlength=ALPHABET_SIZE)
            g_left = np.cumsum(gb)[:-1]
            h_left = np.cumsum(hb)[:-1]
            c_left = np.cumsum(cb)[:-1]
            for t in range(ALPHABET_SIZE - 1):
                n_left = c_left[t]
                if n_left == 0 or n_left == len(rows):
                    continue
                gl, hl = g_left[t], h_left[t]
                gr, hr = g_total - gl, h_total - hl
                gain = gl * gl / (hl + _L2_REG) + gr * gr / (hr + _L2_REG) - base
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best = (f, t)

        if best is None:
            return tree.add_leaf(leaf_weight(g_total, h_total))
        f, t = best
        mask = xs[:, f] <= t
        node = tree.add_split(f, t)
        tree.left[node] = build(rows[mask], depth + 1)
        tree.right[node] = build(rows[~mask], depth + 1)
        return node

    build(np.arange(len(x)), 0)
    return tree


def _fit_gini_tree(x: np.ndarray, y: np.ndarray, max_depth: int) -> _Tree:
    """CART classifier; leaf values hold the majority label."""
    tree = _Tree()
    n_features = x.shape[1]

    def majority(counts: np.ndarray) -> float:
        return float(int(counts.argmax()))

    def build(rows: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[rows], minlength=ALPHABET_SIZE)
        n = len(rows)
        if depth >= max_depth or n < 2 or counts.max() == n:
            return tree.add_leaf(majority(counts))

        # Maximizing sum(c^2)/n over the two children minimizes weighted gini.
        base = float((counts.astype(np.float64) ** 2).sum()) / n
        best_score = 0.0
        best: tuple[int, int] | None = None
        xs = x[rows]
        ys = y[rows]
        for f in range(n_features):
            hist = np.bincount(
                xs[:, f].astype(np.int64) * ALPHABET_SIZE + ys,
                minlength=ALPHABET_SIZE * ALPHABET_SIZE,
            ).reshape(ALPHABET_SIZE, ALPHABET_SIZE)
            left = np.cumsum(hist, axis=0)[:-1].astype(np.float64)
            n_left = left.sum(axis=1)
            for t in range(ALPHABET_SIZE - 1):
                nl = n_left[t]
                if nl == 0 or nl == n:
                    continue
                cl = left[t]
                cr = counts - cl
                score = float((cl ** 2).sum()) / nl + float((cr ** 2).sum()) / (n - nl) - base
                if score > best_score + 1e-9:
                    best_score = score
                    best = (f, t)

        if best is None:
            return tree.add_leaf(majority(counts))
        f, t = best
        mask = xs[:, f] <= t
        node = tree.add_split(f, t)
        tree.left[node] = build(rows[mask], depth + 1)
        tree.right[node] = build(rows[~mask], depth + 1)
        return node

    build(np.arange(len(x)), 0)
    return tree


# ---------------------------------------------------------------------------
# model kinds


class _BaseModel:
    kind: ModelKind
    config: PredictorConfig
    train_accuracy: float | None = None

    def __init__(self) -> None:
        self.predict_calls = 0

    @property
    def window(self) -> int:
        return self.config.window

    @property
    def pad_symbol(self) -> int:
        return self.config.pad_symbol

    def _check_context(self, context: Sequence[int]) -> None:
        if len(context) != self.window:
            raise BadContextLength(self.window, len(context))

    def to_bytes(self) -> bytes:
        raise NotImplementedError

    @property
    def byte_size(self) -> int:
        return len(self.to_bytes())


class ConstantModel(_BaseModel):
    """Always predicts the majority training label; ignores the context."""

    kind = ModelKind.CONSTANT

    def __init__(self, majority: int, config: PredictorConfig | None = None):
        super().__init__()
        self.majority = int(majority)
        self.config = config or PredictorConfig(model_kind=ModelKind.CONSTANT)

    @property
    def window(self) -> int:
        # No context needed, so callers never have to assemble one.
        return 0

    def predict(self, context: Sequence[int]) -> int:
        self.predict_calls += 1
        return self.majority

    def predict_many(self, contexts: np.ndarray) -> np.ndarray:
        self.predict_calls += len(contexts)
        return np.full(len(contexts), self.majority, dtype=np.uint8)

    def to_bytes(self) -> bytes:
        return bytes([ModelKind.CONSTANT, self.majority])


class DecisionTreeModel(_BaseModel):
    kind = ModelKind.DECISION_TREE

    def __init__(self, tree: _Tree, config: PredictorConfig):
        super().__init__()
        self.tree = tree
        self.config = config

    def predict(self, context: Sequence[int]) -> int:
        self._check_context(context)
        self.predict_calls += 1
        return int(self.tree.apply_row(context))

    def predict_many(self, contexts: np.ndarray) -> np.ndarray:
        self.predict_calls += len(contexts)
        return self.tree.apply_batch(contexts).astype(np.uint8)

    def to_bytes(self) -> bytes:
        out = bytearray([ModelKind.DECISION_TREE])
        write_uvarint(out, self.config.window)
        write_uvarint(out, self.config.max_depth)
        write_uvarint(out, self.config.seed)
        self.tree.write(out)
        return bytes(out)


class BoostedTreesModel(_BaseModel):
    kind = ModelKind.BOOSTED_TREES

    def __init__(self, init_logits: np.ndarray, trees: list[tuple[int, _Tree]],
                 config: PredictorConfig):
        super().__init__()
        self.init_logits = init_logits  # (13,) float64 prior log-probabilities
        self.trees = trees  # (class, tree) in training order
        self.config = config
        self._init_list = [float(v) for v in init_logits]

    def predict(self, context: Sequence[int]) -> int:
        self._check_context(context)
        self.predict_calls += 1
        logits = self._init_list.copy()
        for cls, tree in self.trees:
            logits[cls] += tree.apply_row(context)
        best, best_val = 0, logits[0]
        for k in range(1, ALPHABET_SIZE):
            if logits[k] > best_val:
                best, best_val = k, logits[k]
        return best

    def predict_many(self, contexts: np.ndarray) -> np.ndarray:
        self.predict_calls += len(contexts)
        logits = np.tile(self.init_logits, (len(contexts), 1))
        for cls, tree in self.trees:
            logits[:, cls] += tree.apply_batch(contexts)
        return logits.argmax(axis=1).astype(np.uint8)

    def to_bytes(self) -> bytes:
        out = bytearray([ModelKind.BOOSTED_TREES])
        write_uvarint(out, self.config.window)
        write_uvarint(out, self.config.max_depth)
        write_uvarint(out, self.config.n_estimators)
        write_uvarint(out, self.config.seed)
        out.extend(struct.pack(f"<{ALPHABET_SIZE}d", *self.init_logits))
        write_uvarint(out, len(self.trees))
        for cls, tree in self.trees:
            out.append(cls)
            tree.write(out)
        return bytes(out)


PredictorModel = ConstantModel | DecisionTreeModel | BoostedTreesModel


# ---------------------------------------------------------------------------
# training


def train(training_set: TrainingSet, config: PredictorConfig) -> PredictorModel:
    """Fit the configured model kind; the result carries train_accuracy."""
    x, y = training_set.features, training_set.labels

    if config.model_kind == ModelKind.CONSTANT:
        if len(y):
            majority = int(np.bincount(y, minlength=ALPHABET_SIZE).argmax())
        else:
            majority = config.pad_symbol
        model: PredictorModel = ConstantModel(majority, config)
    elif len(y) == 0:
        raise EmptyTrainingSet("cannot fit a tree model on an empty training set")
    elif config.model_kind == ModelKind.DECISION_TREE:
        model = DecisionTreeModel(_fit_gini_tree(x, y, config.max_depth), config)
    elif config.model_kind == ModelKind.BOOSTED_TREES:
        model = _fit_boosted(x, y, config)
    else:
        raise UnknownModelKind(int(config.model_kind))

    if len(y):
        predicted = model.predict_many(x)
        model.train_accuracy = float((predicted == y).mean())
        model.predict_calls = 0
    else:
        model.train_accuracy = 1.0
    return model


def _fit_boosted(x: np.ndarray, y: np.ndarray, config: PredictorConfig) -> BoostedTreesModel:
    n = len(y)
    counts = np.bincount(y, minlength=ALPHABET_SIZE).astype(np.float64)
    init_logits = np.log((counts + 1.0) / (n + ALPHABET_SIZE))
    present = [k for k in range(ALPHABET_SIZE) if counts[k] > 0]

    onehot = np.zeros((n, ALPHABET_SIZE), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0

    logits = np.tile(init_logits, (n, 1))
    trees: list[tuple[int, _Tree]] = []
    for _ in range(config.n_estimators):
        shifted = logits - logits.max(axis=1, keepdims=True)
        prob = np.exp(shifted)
        prob /= prob.sum(axis=1, keepdims=True)
        for cls in present:
            grad = prob[:, cls] - onehot[:, cls]
            hess = prob[:, cls] * (1.0 - prob[:, cls])
            tree = _fit_regression_tree(x, grad, hess, config.max_depth)
            logits[:, cls] += tree.apply_batch(x)
            trees.append((cls, tree))
    return BoostedTreesModel(init_logits, trees, config)


# ---------------------------------------------------------------------------
# blob codec


def serialize(model: PredictorModel) -> bytes:
    return model.to_bytes()


def deserialize(data: bytes, window: int | None = None) -> PredictorModel:
    """Rebuild a model from its blob; predictions are bit-identical."""
    try:
        return _deserialize(data, window)
    except TruncatedSection as exc:
        raise CorruptBlob(str(exc)) from exc


def _deserialize(data: bytes, window: int | None) -> PredictorModel:
    if not data:
        raise CorruptBlob("empty model blob")
    kind = data[0]
    if kind == ModelKind.CONSTANT:
        if len(data) < 2:
            raise CorruptBlob("constant blob missing its majority byte")
        config = PredictorConfig(window=window or 1, model_kind=ModelKind.CONSTANT)
        return ConstantModel(data[1], config)
    if kind == ModelKind.DECISION_TREE:
        pos = 1
        w, pos = read_uvarint(data, pos)
        depth, pos = read_uvarint(data, pos)
        seed, pos = read_uvarint(data, pos)
        tree, pos = _Tree.read(data, pos)
        config = PredictorConfig(window=w, model_kind=ModelKind.DECISION_TREE,
                                 max_depth=depth, seed=seed)
        _expect_end(data, pos)
        return DecisionTreeModel(tree, config)
    if kind == ModelKind.BOOSTED_TREES:
        pos = 1
        w, pos = read_uvarint(data, pos)
        depth, pos = read_uvarint(data, pos)
        rounds, pos = read_uvarint(data, pos)
        seed, pos = read_uvarint(data, pos)
        if pos + 8 * ALPHABET_SIZE > len(data):
            raise CorruptBlob("boosted blob missing prior logits")
        init = np.array(struct.unpack_from(f"<{ALPHABET_SIZE}d", data, pos))
        pos += 8 * ALPHABET_SIZE
        tree_count, pos = read_uvarint(data, pos)
        trees = []
        for _ in range(tree_count):
            if pos >= len(data):
                raise CorruptBlob("boosted blob tree list truncated")
            cls = data[pos]
            pos += 1
            if cls >= ALPHABET_SIZE:
                raise CorruptBlob(f"tree class {cls} outside alphabet")
            tree, pos = _Tree.read(data, pos)
            trees.append((cls, tree))
        config = PredictorConfig(window=w, model_kind=ModelKind.BOOSTED_TREES,
                                 max_depth=depth, n_estimators=rounds, seed=seed)
        _expect_end(data, pos)
        return BoostedTreesModel(init, trees, config)
    raise UnknownModelKind(kind)


def _expect_end(data: bytes, pos: int) -> None:
    if pos != len(data):
        raise CorruptBlob(f"{len(data) - pos} trailing bytes after model blob")
