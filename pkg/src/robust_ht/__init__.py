"""Robust hard thresholding for sparse estimation under corruption and heavy tails."""

from robust_ht.core import (
    Dataset,
    IterateRecord,
    SolverConfig,
    hard_threshold,
    project_ball,
    read_dataset_csv,
    write_dataset_csv,
)
from robust_ht.losses import LossSpec, grad_huber, grad_logistic, grad_squared, objective
from robust_ht.robust_mean import RobustMeanSpec, aggregate_gradients, mom_1d, trimmed_mean_1d
from robust_ht.solver import SolveResult, SolverError, solve
from robust_ht.synthgen import GenSpec, GroundTruth, generate
from robust_ht.graphical import GraphEstimate, regression_path, robust_ns, roc_auc, roc_points
from robust_ht.baselines import LassoConfig, lasso, vanilla_iht

__all__ = [
    "Dataset",
    "GenSpec",
    "GraphEstimate",
    "GroundTruth",
    "LassoConfig",
    "IterateRecord",
    "LossSpec",
    "RobustMeanSpec",
    "SolveResult",
    "SolverConfig",
    "SolverError",
    "aggregate_gradients",
    "grad_huber",
    "grad_logistic",
    "generate",
    "grad_squared",
    "hard_threshold",
    "lasso",
    "mom_1d",
    "objective",
    "project_ball",
    "read_dataset_csv",
    "regression_path",
    "robust_ns",
    "roc_auc",
    "roc_points",
    "solve",
    "trimmed_mean_1d",
    "vanilla_iht",
    "write_dataset_csv",
]

__version__ = "0.1.0"
