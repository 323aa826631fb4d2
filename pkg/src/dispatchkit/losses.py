"""Penalty-matrix loss and class-imbalance weighting schemes.

The loss is softmax cross-entropy gated by a hard misclassification
check: correctly argmax-classified samples contribute exactly zero, and
misclassified ones are scaled by class_weights[y_true] * P[y_true, y_pred].
The multiplier is constant w.r.t. parameters (argmax is not
differentiable), so the gradient flows only through the cross-entropy
term.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

PENALTY_MIN = 0.0
PENALTY_MAX = 100.0


class WeightingScheme(Enum):
    INS = "ins"    # inverse of sample count
    ISNS = "isns"  # inverse square root of sample count
    ENS = "ens"    # effective number of samples


@dataclass(frozen=True)
class WeightingSpec:
    scheme: WeightingScheme
    beta: float = 0.999  # used only by ENS

    def __post_init__(self):
        if self.scheme is WeightingScheme.ENS and not 0.0 < self.beta < 1.0:
            raise ValueError(f"ENS beta must be in (0,1), got {self.beta}")


def validate_penalty_matrix(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"penalty matrix must be square, got shape {p.shape}")
    if np.any(np.diag(p) != 0.0):
        raise ValueError("penalty matrix diagonal must be exactly 0")
    if np.any(p < PENALTY_MIN) or np.any(p > PENALTY_MAX):
        raise ValueError(f"penalties must lie in [{PENALTY_MIN}, {PENALTY_MAX}]")
    return p


def class_weights(counts, spec: WeightingSpec) -> np.ndarray:
    """Per-class weights, rescaled to mean 1.

    INS: 1/n, ISNS: 1/sqrt(n), ENS: (1-beta)/(1-beta^n).
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 1):
        raise ValueError("every class count must be >= 1")
    if spec.scheme is WeightingScheme.INS:
        raw = 1.0 / counts
    elif spec.scheme is WeightingScheme.ISNS:
        raw = 1.0 / np.sqrt(counts)
    else:
        raw = (1.0 - spec.beta) / (1.0 - spec.beta ** counts)
    return raw / raw.mean()


@dataclass(frozen=True)
class LossConfig:
    penalties: np.ndarray        # (K, K), zero diagonal
    weights: np.ndarray          # (K,), mean 1 (or uniform)
    always_ce: bool = False      # ablation: plain weighted CE on correct samples too

    def __post_init__(self):
        validate_penalty_matrix(self.penalties)
        if abs(float(np.mean(self.weights)) - 1.0) > 1e-9:
            raise ValueError("class weights must be normalized to mean 1")

    @staticmethod
    def from_counts(penalties, counts, weighting: WeightingSpec, always_ce=False) -> "LossConfig":
        return LossConfig(
            penalties=np.asarray(penalties, dtype=float),
            weights=class_weights(counts, weighting),
            always_ce=always_ce,
        )


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def penalized_loss(
    logits: np.ndarray, labels: np.ndarray, cfg: LossConfig
) -> tuple[float, np.ndarray]:
    """Mean penalized loss over the batch and its gradient w.r.t. logits.

    Ties at the argmax break to the lowest index (numpy argmax), matching
    prediction. Returns (scalar loss, (M, K) gradient).
    """
    logits = np.asarray(logits, dtype=float)
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logit")
    labels = np.asarray(labels)
    m = logits.shape[0]

    preds = np.argmax(logits, axis=1)
    logp = log_softmax(logits)
    ce = -logp[np.arange(m), labels]

    if cfg.always_ce:
        multiplier = cfg.weights[labels]
    else:
        multiplier = np.where(
            preds == labels, 0.0, cfg.weights[labels] * cfg.penalties[labels, preds]
        )

    loss = float((multiplier * ce).mean())

    softmax = np.exp(logp)
    grad = softmax.copy()
    grad[np.arange(m), labels] -= 1.0
    grad *= (multiplier / m)[:, None]
    return loss, grad


def finite_difference_check(
    logits: np.ndarray, labels: np.ndarray, cfg: LossConfig, epsilon: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Only meaningful away from argmax ties (the penalty multiplier jumps
    when a perturbation flips the argmax). Entries with |analytic| <= 1e-8
    are skipped.
    """
    logits = np.asarray(logits, dtype=float)
    _, grad = penalized_loss(logits, labels, cfg)
    max_err = 0.0
    for i in range(logits.shape[0]):
        for j in range(logits.shape[1]):
            a = grad[i, j]
            if abs(a) <= 1e-8:
                continue
            plus = logits.copy()
            plus[i, j] += epsilon
            minus = logits.copy()
            minus[i, j] -= epsilon
            fd = (penalized_loss(plus, labels, cfg)[0] - penalized_loss(minus, labels, cfg)[0]) / (
                2 * epsilon
            )
            max_err = max(max_err, abs(fd - a) / abs(a))
    return max_err
