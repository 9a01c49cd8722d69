"""Multinomial logistic-regression head over dense embeddings.

Zero-initialized, plain mini-batch gradient descent with seeded shuffling
and inverse-frequency sample weighting; the objective is convex, so
training is fully reproducible given (dataset order, hyperparameters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .forest import PredictionResult, inverse_frequency_weights
from .records import N_CLASSES, DocClass
from .textpipe import DimensionMismatchError

MODEL_FORMAT_VERSION = 1


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass
class LinearHyperparams:
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 64
    l2_lambda: float = 1e-4
    seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray  # (n_classes, d)
    bias: np.ndarray  # (n_classes,)
    hyperparams: LinearHyperparams = field(default_factory=LinearHyperparams)

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, dimension: int, hyperparams: Optional[LinearHyperparams] = None) -> "LinearModel":
        return cls(
            weights=np.zeros((N_CLASSES, dimension)),
            bias=np.zeros(N_CLASSES),
            hyperparams=hyperparams or LinearHyperparams(),
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: LinearModel, embedding: np.ndarray) -> PredictionResult:
    e = np.asarray(embedding, dtype=float)
    if e.shape != (model.dimension,):
        raise DimensionMismatchError(
            f"embedding dimension {e.shape} != model dimension ({model.dimension},)"
        )
    probs = softmax(model.weights @ e + model.bias)
    return PredictionResult.from_probabilities(probs)


def loss_and_grad(
    model: LinearModel,
    batch: Sequence[tuple[np.ndarray, DocClass]],
    sample_weights: Optional[Sequence[float]] = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted mean cross-entropy plus L2 penalty, and its exact gradient.

    loss = sum_i w_i * (-ln p_i[gold_i]) / sum_i w_i + (l2/2) * ||W||^2
    Returns (loss, grad_weights, grad_bias).
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    X = np.stack([np.asarray(e, dtype=float) for e, _ in batch])
    if X.shape[1] != model.dimension:
        raise DimensionMismatchError(
            f"batch dimension {X.shape[1]} != model dimension {model.dimension}"
        )
    y = np.array([int(c) for _, c in batch])
    if sample_weights is None:
        w = np.ones(len(batch))
    else:
        w = np.asarray(sample_weights, dtype=float)
    w = w / w.sum()

    lam = model.hyperparams.l2_lambda
    probs = softmax(X @ model.weights.T + model.bias)
    gold_p = probs[np.arange(len(y)), y]
    loss = float(-(w * np.log(np.clip(gold_p, 1e-300, None))).sum())
    loss += 0.5 * lam * float((model.weights**2).sum())

    delta = probs.copy()
    delta[np.arange(len(y)), y] -= 1.0
    delta *= w[:, None]
    grad_w = delta.T @ X + lam * model.weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def train_linear(
    dataset: Sequence[tuple[np.ndarray, DocClass]],
    hyperparams: Optional[LinearHyperparams] = None,
    class_weights: Optional[Sequence[float]] = None,
) -> LinearModel:
    """Mini-batch gradient descent from a zero model.

    Per-sample weights follow the inverse-frequency rule unless
    class_weights is supplied. Raises DivergenceError if the loss goes
    non-finite.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    hp = hyperparams or LinearHyperparams()
    dims = {np.asarray(e).shape for e, _ in dataset}
    if len(dims) != 1:
        raise DimensionMismatchError(f"inconsistent embedding shapes: {dims}")
    d = dataset[0][0].shape[0] if hasattr(dataset[0][0], "shape") else len(dataset[0][0])
    model = LinearModel.zeros(d, hp)

    labels = [y for _, y in dataset]
    cw = list(class_weights) if class_weights is not None else inverse_frequency_weights(labels)
    weights = np.array([cw[int(y)] for y in labels])

    rng = np.random.Generator(np.random.PCG64(hp.seed))
    n = len(dataset)
    for _epoch in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            batch = [dataset[i] for i in idx]
            loss, gw, gb = loss_and_grad(model, batch, weights[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became non-finite ({loss})")
            model.weights -= hp.learning_rate * gw
            model.bias -= hp.learning_rate * gb
    return model


def save_linear(model: LinearModel, path: str | Path) -> None:
    hp = model.hyperparams
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "dimension": model.dimension,
        "hyperparameters": {
            "learning_rate": hp.learning_rate,
            "epochs": hp.epochs,
            "batch_size": hp.batch_size,
            "l2_lambda": hp.l2_lambda,
            "seed": hp.seed,
        },
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_linear(path: str | Path) -> LinearModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported linear format_version {obj.get('format_version')!r}")
    return LinearModel(
        weights=np.array(obj["weights"]),
        bias=np.array(obj["bias"]),
        hyperparams=LinearHyperparams(**obj["hyperparameters"]),
    )
