"""Single fully connected softmax dispatch head and its training loop."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .losses import LossConfig, penalized_loss


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class DispatchHead:
    weights: np.ndarray        # (K, D)
    bias: np.ndarray           # (K,)
    feature_mean: np.ndarray   # (D,) standardization shift
    feature_scale: np.ndarray  # (D,) standardization scale

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def num_models(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    warmup_epochs: int = 1  # plain weighted CE before switching to the penalized loss

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


@dataclass(frozen=True)
class TrainHistory:
    loss: tuple[float, ...]
    train_accuracy: tuple[float, ...]


def init_head(feature_dim: int, num_models: int, seed: int = 0) -> DispatchHead:
    """Uniform fan-in init: weights in [-1/sqrt(D), 1/sqrt(D)], bias zero."""
    if feature_dim < 1 or num_models < 2:
        raise ValueError("need feature_dim >= 1 and num_models >= 2")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(feature_dim)
    return DispatchHead(
        weights=rng.uniform(-scale, scale, size=(num_models, feature_dim)),
        bias=np.zeros(num_models),
        feature_mean=np.zeros(feature_dim),
        feature_scale=np.ones(feature_dim),
    )


def standardization_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std < 1e-12] = 1.0
    return mean, std


def logits_of(head: DispatchHead, features: np.ndarray) -> np.ndarray:
    z = (np.asarray(features, dtype=float) - head.feature_mean) / head.feature_scale
    return z @ head.weights.T + head.bias


def predict(head: DispatchHead, features: np.ndarray) -> np.ndarray:
    """Per-row argmax model choice; ties break to the lowest index."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] != head.feature_dim:
        raise ValueError(
            f"feature shape {features.shape} incompatible with head dim {head.feature_dim}"
        )
    return np.argmax(logits_of(head, features), axis=1)


def head_cost_mflops(feature_dim: int, num_models: int) -> float:
    """FC layer cost per image: multiply-add as 2 FLOPs plus bias adds."""
    return (2.0 * feature_dim * num_models + num_models) / 1e6


def train_head(
    head: DispatchHead,
    features: np.ndarray,
    labels: np.ndarray,
    cfg_loss: LossConfig,
    cfg_train: TrainConfig,
) -> tuple[DispatchHead, TrainHistory]:
    """Mini-batch gradient descent with momentum on the penalized loss.

    Features are standardized to the training set's per-dimension
    mean/std; the fitted statistics ride along in the returned head so
    prediction sees the same transform. Deterministic in (seed, data).
    The recorded per-epoch loss is the size-weighted mean of the batch
    losses at the parameters each batch was evaluated with (pre-update).
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if len(features) == 0:
        raise ValueError("empty training data")

    mean, scale = standardization_stats(features)
    z = (features - mean) / scale

    w = head.weights.copy()
    b = head.bias.copy()
    vel_w = np.zeros_like(w)
    vel_b = np.zeros_like(b)
    warmup_cfg = replace(cfg_loss, always_ce=True)

    rng = np.random.default_rng(cfg_train.seed)
    n = len(z)
    losses, accs = [], []
    for epoch in range(cfg_train.epochs):
        cfg = warmup_cfg if epoch < cfg_train.warmup_epochs else cfg_loss
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg_train.batch_size):
            idx = order[start : start + cfg_train.batch_size]
            logits = z[idx] @ w.T + b
            loss, grad = penalized_loss(logits, labels[idx], cfg)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            epoch_loss += loss * len(idx)
            grad_w = grad.T @ z[idx]
            grad_b = grad.sum(axis=0)
            vel_w = cfg_train.momentum * vel_w + grad_w
            vel_b = cfg_train.momentum * vel_b + grad_b
            w = w - cfg_train.learning_rate * vel_w
            b = b - cfg_train.learning_rate * vel_b
        losses.append(epoch_loss / n)
        accs.append(float((np.argmax(z @ w.T + b, axis=1) == labels).mean()))

    trained = DispatchHead(weights=w, bias=b, feature_mean=mean, feature_scale=scale)
    return trained, TrainHistory(loss=tuple(losses), train_accuracy=tuple(accs))


def save_head(head: DispatchHead, path: str | Path) -> None:
    payload = {
        "feature_dim": head.feature_dim,
        "num_models": head.num_models,
        "weights": head.weights.flatten().tolist(),
        "bias": head.bias.tolist(),
        "feature_mean": head.feature_mean.tolist(),
        "feature_scale": head.feature_scale.tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def load_head(path: str | Path) -> DispatchHead:
    payload = json.loads(Path(path).read_text())
    d, k = payload["feature_dim"], payload["num_models"]
    return DispatchHead(
        weights=np.array(payload["weights"]).reshape(k, d),
        bias=np.array(payload["bias"]),
        feature_mean=np.array(payload["feature_mean"]),
        feature_scale=np.array(payload["feature_scale"]),
    )
