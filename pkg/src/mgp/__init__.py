"""Multiscale sparse Gaussian process regression.

Hierarchical greedy clustering selects a reduced set of Gaussian basis
centers with per-center widths; two mathematically equivalent regression
paths (weight-space, D x D; function-space, N x N) provide training,
mean/variance prediction and the log-marginal likelihood, with simplex
hyperparameter optimization and a benchmark harness on top.
"""

from .clustering import (ClusterResult, ScaleConfig, cluster_multiscale,
                         cluster_single_scale, coverage_report)
from .dataset import (Dataset, NormalizationStats, SyntheticSpec, generate,
                      load_csv, normalize, denormalize, normalized_error)
from .kernel import (BasisSet, basis_eval, basis_from_clusters, design_matrix,
                     full_basis, gram, kernel_matrix, kstar)
from .linalg import (CholeskyFactor, JitterPolicy, cholesky, logdet,
                     solve_lower, solve_spd, solve_upper)
from .regression import (Hyperparameters, MethodDModel, MethodNModel,
                         Prediction, lemma1_residual, lml_d, lml_n,
                         predict_d, predict_n, train_d, train_n)
from .hyperopt import (OptimizerConfig, OptimizationReport, nelder_mead,
                       objective, optimize_lml, transform, untransform)
from .modelio import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "BasisSet", "CholeskyFactor", "ClusterResult", "Dataset",
    "Hyperparameters", "JitterPolicy", "MethodDModel", "MethodNModel",
    "NormalizationStats", "OptimizationReport", "OptimizerConfig",
    "Prediction", "ScaleConfig", "SyntheticSpec", "basis_eval",
    "basis_from_clusters", "cholesky", "cluster_multiscale",
    "cluster_single_scale", "coverage_report", "denormalize",
    "design_matrix", "full_basis", "generate", "gram", "kernel_matrix",
    "kstar", "lemma1_residual", "lml_d", "lml_n", "load_csv", "load_model",
    "logdet", "nelder_mead", "normalize", "normalized_error", "objective",
    "optimize_lml", "predict_d", "predict_n", "save_model", "solve_lower",
    "solve_spd", "solve_upper", "train_d", "train_n", "transform",
    "untransform",
]
