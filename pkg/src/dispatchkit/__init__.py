"""Dispatcher synthesis over pools of pre-trained predictors.

Given per-input correctness and per-inference cost for a set of models,
this package trains a linear softmax dispatcher under a penalty-matrix
loss and explores penalty/weighting configurations with NSGA-II to trade
system accuracy against operations per image.
"""

__version__ = "0.1.0"

from .evaluation import CostModel, EvalPoint, dominates, evaluate_system, hypervolume_2d
from .evaluation import pareto_front
from .head import DispatchHead, TrainConfig, head_cost_mflops, init_head, predict, train_head
from .losses import LossConfig, WeightingScheme, WeightingSpec, class_weights, penalized_loss
from .nsga2 import MoeaConfig, run_nsga2
from .oracle import combination_histogram, ideal_metrics, label_distribution, oracle_relabel
from .scenario import (
    ExtractorProfile,
    ModelProfile,
    Scenario,
    ScenarioError,
    SyntheticSpec,
    generate_synthetic,
    load_scenario,
    split_scenario,
    validate_scenario,
    write_scenario,
)

__all__ = [
    "CostModel",
    "DispatchHead",
    "EvalPoint",
    "ExtractorProfile",
    "LossConfig",
    "ModelProfile",
    "MoeaConfig",
    "Scenario",
    "ScenarioError",
    "SyntheticSpec",
    "TrainConfig",
    "WeightingScheme",
    "WeightingSpec",
    "class_weights",
    "combination_histogram",
    "dominates",
    "evaluate_system",
    "generate_synthetic",
    "head_cost_mflops",
    "hypervolume_2d",
    "ideal_metrics",
    "init_head",
    "label_distribution",
    "load_scenario",
    "oracle_relabel",
    "pareto_front",
    "penalized_loss",
    "predict",
    "run_nsga2",
    "split_scenario",
    "train_head",
    "validate_scenario",
    "write_scenario",
]
