"""Ideal-dispatcher arithmetic over a correctness matrix.

Everything here treats the correctness matrix as ground truth: which
correctness patterns occur, which is the cheapest correct model per
sample, and what an ideal zero-cost dispatcher would achieve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IdealMetrics:
    ideal_accuracy: float
    ideal_mflops_per_image: float
    per_model_accuracy: tuple[float, ...]
    reduction_vs_each_model: tuple[float, ...]       # fraction of MFLOPs saved
    accuracy_delta_vs_each_model: tuple[float, ...]  # percentage points gained


def combination_histogram(correctness: np.ndarray) -> dict[str, int]:
    """Count samples per correctness bit pattern, e.g. "011" -> 1759.

    Bit order follows model order (cheapest first). Absent patterns are
    simply missing from the map.
    """
    c = np.asarray(correctness)
    k = c.shape[1]
    weights = 1 << np.arange(k - 1, -1, -1)
    codes = c.astype(np.int64) @ weights
    hist: dict[str, int] = {}
    for code, count in zip(*np.unique(codes, return_counts=True)):
        hist[format(int(code), f"0{k}b")] = int(count)
    return hist


def oracle_relabel(correctness: np.ndarray) -> np.ndarray:
    """Label each sample with the cheapest correct model's index.

    Models are assumed sorted ascending by cost, so this is the first
    column holding a 1. Rows with no correct model fall back to 0: the
    cheapest model minimizes the compute wasted on a wrong answer either
    way. argmax on a binary row is exactly this first-hit scan.
    """
    return np.argmax(np.asarray(correctness), axis=1)


def label_distribution(labels: np.ndarray, num_models: int) -> np.ndarray:
    """Fraction of samples assigned to each model index."""
    counts = np.bincount(np.asarray(labels), minlength=num_models)
    return counts / counts.sum()


def ideal_metrics(correctness: np.ndarray, costs: np.ndarray) -> IdealMetrics:
    """Accuracy/cost of the ideal dispatcher and deltas vs single models.

    The ideal dispatcher itself is costed at zero: it is a bound, not a
    system. Samples no model gets right still run the cheapest model and
    count as wrong.
    """
    c = np.asarray(correctness)
    costs = np.asarray(costs, dtype=float)
    if np.any(np.diff(costs) <= 0):
        raise ValueError("costs must be strictly ascending")
    labels = oracle_relabel(c)
    ideal_acc = float(c.any(axis=1).mean())
    ideal_cost = float(costs[labels].mean())
    per_model_acc = c.mean(axis=0)
    return IdealMetrics(
        ideal_accuracy=ideal_acc,
        ideal_mflops_per_image=ideal_cost,
        per_model_accuracy=tuple(float(a) for a in per_model_acc),
        reduction_vs_each_model=tuple(float(1.0 - ideal_cost / ck) for ck in costs),
        accuracy_delta_vs_each_model=tuple(
            float((ideal_acc - a) * 100.0) for a in per_model_acc
        ),
    )


def analysis_report(correctness: np.ndarray, costs: np.ndarray) -> dict:
    """JSON-ready bundle of histogram, label distribution and ideal metrics."""
    labels = oracle_relabel(correctness)
    k = np.asarray(correctness).shape[1]
    metrics = ideal_metrics(correctness, costs)
    return {
        "num_samples": int(np.asarray(correctness).shape[0]),
        "combination_histogram": combination_histogram(correctness),
        "oracle_label_distribution": [float(f) for f in label_distribution(labels, k)],
        "ideal_accuracy": metrics.ideal_accuracy,
        "ideal_mflops_per_image": metrics.ideal_mflops_per_image,
        "per_model_baselines": [
            {
                "cost_mflops": float(c),
                "accuracy": metrics.per_model_accuracy[i],
                "ideal_reduction_percent": metrics.reduction_vs_each_model[i] * 100.0,
                "ideal_accuracy_delta_pp": metrics.accuracy_delta_vs_each_model[i],
            }
            for i, c in enumerate(np.asarray(costs, dtype=float))
        ],
    }
