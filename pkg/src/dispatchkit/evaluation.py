"""System-level scoring and Pareto utilities.

An EvalPoint is (accuracy up, mean MFLOPs per image down) for one full
system: feature extraction + FC head + the dispatched model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .head import DispatchHead, predict
from .scenario import Scenario


@dataclass(frozen=True)
class EvalPoint:
    accuracy: float
    mflops_per_image: float
    tag: str = ""


@dataclass(frozen=True)
class CostModel:
    extractor_mflops: float
    head_mflops: float
    model_mflops: tuple[float, ...]
    reuse_backbone: bool = False
    backbone_index: int | None = None
    backbone_residual_mflops: float | None = None

    def per_choice_cost(self) -> np.ndarray:
        """Total per-image MFLOPs for each possible dispatch choice."""
        costs = np.asarray(self.model_mflops, dtype=float).copy()
        if self.reuse_backbone:
            if self.backbone_index is None or self.backbone_residual_mflops is None:
                raise ValueError("reuse_backbone requires backbone index and residual cost")
            costs[self.backbone_index] = self.backbone_residual_mflops
        return costs + self.extractor_mflops + self.head_mflops


def cost_model_for(scenario: Scenario, head_mflops: float, reuse_backbone: bool = False) -> CostModel:
    backbone = next(
        (i for i, m in enumerate(scenario.models) if m.is_extractor_backbone), None
    )
    residual = (
        scenario.models[backbone].residual_mflops if backbone is not None else None
    )
    return CostModel(
        extractor_mflops=scenario.extractor.cost_mflops,
        head_mflops=head_mflops,
        model_mflops=tuple(m.cost_mflops for m in scenario.models),
        reuse_backbone=reuse_backbone,
        backbone_index=backbone,
        backbone_residual_mflops=residual,
    )


def evaluate_system(
    head: DispatchHead, scenario: Scenario, split: str, cost: CostModel, tag: str = ""
) -> EvalPoint:
    """Mean correctness and mean per-image MFLOPs over a split."""
    idx = scenario.split_indices(split) if scenario.splits else np.arange(scenario.num_samples)
    choices = predict(head, scenario.features[idx])
    correct = scenario.correctness[idx, choices]
    per_choice = cost.per_choice_cost()
    return EvalPoint(
        accuracy=float(correct.mean()),
        mflops_per_image=float(per_choice[choices].mean()),
        tag=tag,
    )


def dominates(a: EvalPoint, b: EvalPoint) -> bool:
    """a at least as good in both objectives and strictly better in one."""
    return (
        a.accuracy >= b.accuracy
        and a.mflops_per_image <= b.mflops_per_image
        and (a.accuracy > b.accuracy or a.mflops_per_image < b.mflops_per_image)
    )


def pareto_front(points: list[EvalPoint]) -> list[EvalPoint]:
    """Non-dominated subset, input order preserved, duplicates retained.

    Sorted sweep over cost groups: a point survives iff no strictly
    cheaper point matches its accuracy and no equal-cost point beats it.
    """
    if not points:
        return []
    order = sorted(range(len(points)), key=lambda i: points[i].mflops_per_image)
    keep = np.zeros(len(points), dtype=bool)
    best_acc_cheaper = -np.inf
    i = 0
    while i < len(order):
        j = i
        cost = points[order[i]].mflops_per_image
        while j < len(order) and points[order[j]].mflops_per_image == cost:
            j += 1
        group = order[i:j]
        group_max = max(points[g].accuracy for g in group)
        for g in group:
            acc = points[g].accuracy
            keep[g] = acc > best_acc_cheaper and acc >= group_max
        best_acc_cheaper = max(best_acc_cheaper, group_max)
        i = j
    return [p for p, k in zip(points, keep) if k]


def hypervolume_2d(points: list[EvalPoint], reference: tuple[float, float]) -> float:
    """Area dominated by the front w.r.t. (accuracy_floor, mflops_ceiling).

    Points outside the reference box contribute nothing. Sorted sweep
    over the non-dominated subset.
    """
    acc_floor, mflops_ceiling = reference
    inside = [
        p
        for p in points
        if p.accuracy > acc_floor and p.mflops_per_image < mflops_ceiling
    ]
    front = pareto_front(inside)
    front.sort(key=lambda p: p.mflops_per_image)
    hv = 0.0
    for i, p in enumerate(front):
        right = front[i + 1].mflops_per_image if i + 1 < len(front) else mflops_ceiling
        hv += (p.accuracy - acc_floor) * (right - p.mflops_per_image)
    return hv
