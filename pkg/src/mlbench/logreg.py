"""Binary logistic regression: prediction, cross-entropy loss, and gradient.

The objective minimized by every SGD mode. All operations are pure
functions of their inputs and safe to call concurrently on shared
immutable models and data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datasets import DenseDataset, MiniBatch

__all__ = [
    "LogisticModel",
    "Gradient",
    "sigmoid",
    "predict_prob",
    "batch_loss",
    "batch_gradient",
    "save_model",
    "load_model",
]

_EPS = 1e-12


@dataclass(frozen=True)
class LogisticModel:
    """Weight vector plus bias; the parameters of the logistic function."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1:
            raise ValueError(f"weights must be 1-D, got shape {weights.shape}")
        if not (np.all(np.isfinite(weights)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zeros(cls, n_dims: int) -> "LogisticModel":
        return cls(np.zeros(n_dims), 0.0)


@dataclass(frozen=True)
class Gradient:
    """Gradient of the batch loss: one component per weight plus the bias."""

    weights: np.ndarray
    bias: float


def sigmoid(z):
    """Numerically stable logistic function, elementwise on arrays.

    Uses the exp of a non-positive argument on both branches so |z| up to
    and beyond 500 neither overflows nor warns.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def predict_prob(model: LogisticModel, x) -> float:
    """Probability of class 1 for a single feature row."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(f"feature length {x.shape} != weights {model.weights.shape}")
    return sigmoid(model.bias + model.weights @ x)


def _batch_probs(model: LogisticModel, data: DenseDataset, batch: MiniBatch):
    rows = data.features[batch.row_indices]
    return sigmoid(rows @ model.weights + model.bias), rows


def batch_loss(model: LogisticModel, data: DenseDataset, batch: MiniBatch) -> float:
    """Mean binary cross-entropy over the batch, probabilities clamped to [eps, 1-eps]."""
    if batch.size == 0:
        raise ValueError("empty batch")
    p, _ = _batch_probs(model, data, batch)
    p = np.clip(p, _EPS, 1.0 - _EPS)
    y = data.labels[batch.row_indices]
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def batch_gradient(model: LogisticModel, data: DenseDataset, batch: MiniBatch) -> Gradient:
    """Exact gradient of batch_loss: (1/b) sum (p - y) x and (1/b) sum (p - y)."""
    if batch.size == 0:
        raise ValueError("empty batch")
    p, rows = _batch_probs(model, data, batch)
    residual = p - data.labels[batch.row_indices]
    b = batch.size
    return Gradient(rows.T @ residual / b, float(residual.sum() / b))


def full_batch(data: DenseDataset) -> MiniBatch:
    """The batch containing every row, in index order."""
    if data.n_rows == 0:
        raise ValueError("empty dataset")
    return MiniBatch(np.arange(data.n_rows))


def save_model(model: LogisticModel, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump({"weights": model.weights.tolist(), "bias": model.bias}, fh)


def load_model(path) -> LogisticModel:
    with open(path, "r", encoding="ascii") as fh:
        raw = json.load(fh)
    return LogisticModel(np.array(raw["weights"], dtype=np.float64), float(raw["bias"]))
