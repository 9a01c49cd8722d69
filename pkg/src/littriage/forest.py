"""Random forest over sparse TF-IDF vectors, implemented from scratch.

Trees split on Gini impurity weighted by per-class sample weights; leaves
hold weight-summed class totals and prediction soft-votes the per-leaf
distributions. Tree training is deterministic: tree t draws all its
randomness from a child seed splitmix64(seed XOR splitmix64(t + 1)), so
results do not depend on scheduling order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .records import N_CLASSES, DocClass
from .textpipe import DimensionMismatchError, SparseVector

MODEL_FORMAT_VERSION = 1

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; pinned so child seeds are reproducible everywhere."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def child_seed(seed: int, tree_index: int) -> int:
    return splitmix64((seed & _MASK64) ^ splitmix64(tree_index + 1))


class EmptyNodeError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


def gini(class_counts: Sequence[float]) -> float:
    """Gini impurity 1 - sum((c_k/total)^2); counts may be weighted reals."""
    total = float(sum(class_counts))
    if total <= 0:
        raise EmptyNodeError("gini of an empty node is undefined")
    return 1.0 - sum((c / total) ** 2 for c in class_counts)


@dataclass
class TreeNode:
    # internal node fields
    feature_index: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    # leaf field: weight-summed class totals
    class_counts: Optional[list[float]] = None

    @property
    def is_leaf(self) -> bool:
        return self.class_counts is not None


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int = 16
    min_samples_leaf: int = 2
    seed: int = 0
    class_weights: Optional[list[float]] = None  # None -> inverse frequency

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth, min_samples_leaf must all be >= 1")
        if self.class_weights is not None:
            if len(self.class_weights) != N_CLASSES or any(w <= 0 for w in self.class_weights):
                raise ValueError(f"class_weights must be {N_CLASSES} positive reals")


@dataclass
class ForestModel:
    params: ForestParams
    dimension: int
    vocabulary_hash: str
    trees: list[TreeNode] = field(default_factory=list)


@dataclass(frozen=True)
class PredictionResult:
    predicted: DocClass
    probabilities: tuple[float, ...]
    entropy: float

    @classmethod
    def from_probabilities(cls, probs: Sequence[float]) -> "PredictionResult":
        total = float(sum(probs))
        p = [x / total for x in probs]
        ent = -sum(x * math.log(x) for x in p if x > 0.0)
        # argmax with ties resolved to the lowest canonical class index
        best = max(range(N_CLASSES), key=lambda k: (p[k], -k))
        return cls(predicted=DocClass(best), probabilities=tuple(p), entropy=ent)


def inverse_frequency_weights(labels: Sequence[DocClass]) -> list[float]:
    """w_c = N / (n_classes * n_c); classes absent from the data get weight 1."""
    counts = [0] * N_CLASSES
    for y in labels:
        counts[int(y)] += 1
    n = len(labels)
    return [n / (N_CLASSES * c) if c > 0 else 1.0 for c in counts]


def best_split(
    samples: Sequence[tuple[SparseVector, DocClass, float]],
    candidate_features: Sequence[int],
    min_samples_leaf: int = 1,
) -> Optional[tuple[int, float, float]]:
    """Best (feature, threshold, impurity_decrease) over the candidates.

    Thresholds are midpoints between consecutive distinct observed values
    (absent sparse entries read as 0.0). Ties break toward the lower
    feature index, then the lower threshold. None when no split yields a
    positive decrease.
    """
    if not samples:
        raise EmptyDatasetError("best_split needs at least one sample")
    n = len(samples)
    dim = samples[0][0].dimension
    X = np.zeros((n, len(candidate_features)))
    feats = sorted(set(candidate_features))
    col_of = {f: j for j, f in enumerate(feats)}
    for i, (vec, _y, _w) in enumerate(samples):
        if vec.dimension != dim:
            raise DimensionMismatchError("samples have inconsistent dimensions")
        for idx, w in zip(vec.indices, vec.weights):
            j = col_of.get(idx)
            if j is not None:
                X[i, j] = w
    y = np.array([int(s[1]) for s in samples])
    w = np.array([s[2] for s in samples])
    found = _best_split_dense(X, y, w, np.arange(len(feats)), min_samples_leaf)
    if found is None:
        return None
    col, thr, dec = found
    return feats[col], thr, dec


def _best_split_dense(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    candidate_cols: np.ndarray,
    min_samples_leaf: int,
) -> Optional[tuple[int, float, float]]:
    """Vectorized split search on a dense matrix; columns scanned ascending."""
    n = len(y)
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y] = w
    total_counts = onehot.sum(axis=0)
    total_w = total_counts.sum()
    parent_gini = 1.0 - float(((total_counts / total_w) ** 2).sum())
    if parent_gini <= 0.0:
        return None

    best: Optional[tuple[int, float, float]] = None
    for col in sorted(int(c) for c in candidate_cols):
        values = X[:, col]
        order = np.argsort(values, kind="stable")
        v = values[order]
        cum = np.cumsum(onehot[order], axis=0)
        # split points: positions where the value changes, leaving at least
        # min_samples_leaf samples on each side
        boundaries = np.nonzero(v[:-1] < v[1:])[0] + 1
        if min_samples_leaf > 1:
            boundaries = boundaries[
                (boundaries >= min_samples_leaf) & (n - boundaries >= min_samples_leaf)
            ]
        if boundaries.size == 0:
            continue
        left = cum[boundaries - 1]
        right = total_counts - left
        wl = left.sum(axis=1)
        wr = right.sum(axis=1)
        gl = 1.0 - (left / wl[:, None]) ** 2 @ np.ones(N_CLASSES)
        gr = 1.0 - (right / wr[:, None]) ** 2 @ np.ones(N_CLASSES)
        decrease = parent_gini - (wl * gl + wr * gr) / total_w
        k = int(np.argmax(decrease))
        dec = float(decrease[k])
        if dec <= 0.0:
            continue
        s = boundaries[k]
        thr = float((v[s - 1] + v[s]) / 2.0)
        if best is None or dec > best[2]:
            best = (col, thr, dec)
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    idx: np.ndarray,
    depth: int,
    params: ForestParams,
    rng: np.random.Generator,
    n_candidates: int,
) -> TreeNode:
    sub_y = y[idx]
    counts = np.bincount(sub_y, weights=w[idx], minlength=N_CLASSES)
    if depth >= params.max_depth or len(idx) < 2 * params.min_samples_leaf or np.all(sub_y == sub_y[0]):
        return TreeNode(class_counts=counts.tolist())
    cand = rng.choice(X.shape[1], size=n_candidates, replace=False)
    found = _best_split_dense(X[idx], sub_y, w[idx], cand, params.min_samples_leaf)
    if found is None:
        return TreeNode(class_counts=counts.tolist())
    col, thr, _dec = found
    mask = X[idx, col] <= thr
    left = _grow(X, y, w, idx[mask], depth + 1, params, rng, n_candidates)
    right = _grow(X, y, w, idx[~mask], depth + 1, params, rng, n_candidates)
    return TreeNode(feature_index=int(col), threshold=thr, left=left, right=right)


def densify(vectors: Sequence[SparseVector]) -> np.ndarray:
    if not vectors:
        raise EmptyDatasetError("no vectors")
    dim = vectors[0].dimension
    X = np.zeros((len(vectors), dim))
    for i, vec in enumerate(vectors):
        if vec.dimension != dim:
            raise DimensionMismatchError("vectors have inconsistent dimensions")
        if vec.indices:
            X[i, list(vec.indices)] = vec.weights
    return X


def train_forest(
    dataset: Sequence[tuple[SparseVector, DocClass]],
    params: ForestParams,
    vocabulary_hash: str = "",
) -> ForestModel:
    """Fit the forest. Deterministic given (dataset order, params)."""
    if not dataset:
        raise EmptyDatasetError("cannot train on an empty dataset")
    X = densify([v for v, _ in dataset])
    labels = [y for _, y in dataset]
    y = np.array([int(c) for c in labels])
    weights = params.class_weights or inverse_frequency_weights(labels)
    w = np.array([weights[c] for c in y])
    n, dim = X.shape
    n_candidates = min(dim, max(1, math.ceil(math.sqrt(dim))))

    trees = []
    for t in range(params.n_trees):
        rng = np.random.Generator(np.random.PCG64(child_seed(params.seed, t)))
        boot = rng.integers(0, n, size=n)
        trees.append(_grow(X, y, w, boot, 0, params, rng, n_candidates))
    resolved = ForestParams(
        n_trees=params.n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        seed=params.seed,
        class_weights=list(weights),
    )
    return ForestModel(params=resolved, dimension=dim, vocabulary_hash=vocabulary_hash, trees=trees)


def _leaf_for(node: TreeNode, vec: SparseVector) -> TreeNode:
    lookup = dict(zip(vec.indices, vec.weights))
    while not node.is_leaf:
        value = lookup.get(node.feature_index, 0.0)
        node = node.left if value <= node.threshold else node.right
    return node


def predict_forest(model: ForestModel, vec: SparseVector) -> PredictionResult:
    """Soft vote: mean over trees of per-leaf normalized class totals."""
    if vec.dimension != model.dimension:
        raise DimensionMismatchError(
            f"vector dimension {vec.dimension} != model dimension {model.dimension}"
        )
    probs = np.zeros(N_CLASSES)
    for root in model.trees:
        counts = np.array(_leaf_for(root, vec).class_counts)
        probs += counts / counts.sum()
    return PredictionResult.from_probabilities(probs / len(model.trees))


class _FlatTree:
    """Array form of a tree for vectorized batch prediction."""

    def __init__(self, root: TreeNode):
        feats: list[int] = []
        thr: list[float] = []
        left: list[int] = []
        right: list[int] = []
        dist: list[list[float]] = []

        def add(node: TreeNode) -> int:
            i = len(feats)
            feats.append(node.feature_index)
            thr.append(node.threshold)
            left.append(-1)
            right.append(-1)
            if node.is_leaf:
                counts = np.array(node.class_counts)
                dist.append((counts / counts.sum()).tolist())
            else:
                dist.append([0.0] * N_CLASSES)
            if not node.is_leaf:
                left[i] = add(node.left)
                right[i] = add(node.right)
            return i

        add(root)
        self.feature = np.array(feats)
        self.threshold = np.array(thr)
        self.left = np.array(left)
        self.right = np.array(right)
        self.dist = np.array(dist)

    def predict(self, X: np.ndarray) -> np.ndarray:
        pos = np.zeros(len(X), dtype=np.int64)
        active = self.left[pos] >= 0
        while np.any(active):
            rows = np.nonzero(active)[0]
            node = pos[rows]
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            pos[rows] = np.where(go_left, self.left[node], self.right[node])
            active[rows] = self.left[pos[rows]] >= 0
        return self.dist[pos]


def predict_forest_batch(model: ForestModel, vectors: Sequence[SparseVector]) -> list[PredictionResult]:
    """Batch prediction; identical results to predict_forest per vector."""
    if not vectors:
        return []
    for vec in vectors:
        if vec.dimension != model.dimension:
            raise DimensionMismatchError("vector dimension mismatch")
    X = densify(vectors)
    acc = np.zeros((len(vectors), N_CLASSES))
    for root in model.trees:
        acc += _FlatTree(root).predict(X)
    acc /= len(model.trees)
    return [PredictionResult.from_probabilities(row) for row in acc]


def _tree_to_obj(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"counts": node.class_counts}
    return {
        "f": node.feature_index,
        "t": node.threshold,
        "l": _tree_to_obj(node.left),
        "r": _tree_to_obj(node.right),
    }


def _tree_from_obj(obj: dict) -> TreeNode:
    if "counts" in obj:
        return TreeNode(class_counts=list(obj["counts"]))
    return TreeNode(
        feature_index=obj["f"],
        threshold=obj["t"],
        left=_tree_from_obj(obj["l"]),
        right=_tree_from_obj(obj["r"]),
    )


def save_forest(model: ForestModel, path: str | Path) -> None:
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "params": {
            "n_trees": model.params.n_trees,
            "max_depth": model.params.max_depth,
            "min_samples_leaf": model.params.min_samples_leaf,
            "seed": model.params.seed,
            "class_weights": model.params.class_weights,
        },
        "dimension": model.dimension,
        "vocabulary_hash": model.vocabulary_hash,
        "trees": [_tree_to_obj(t) for t in model.trees],
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_forest(path: str | Path, expected_vocabulary_hash: Optional[str] = None) -> ForestModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format_version {obj.get('format_version')!r}")
    if expected_vocabulary_hash is not None and obj["vocabulary_hash"] != expected_vocabulary_hash:
        raise ValueError("model vocabulary hash does not match the supplied vocabulary")
    return ForestModel(
        params=ForestParams(**obj["params"]),
        dimension=obj["dimension"],
        vocabulary_hash=obj["vocabulary_hash"],
        trees=[_tree_from_obj(t) for t in obj["trees"]],
    )
