"""Bootstrap confidence intervals for canonical correlation analysis directions."""

from __future__ import annotations

__version__ = "0.1.0"

from .align import AlignmentStrategy, AlignmentTransform, align, procrustes_rotation, solve_assignment
from .baselines import anderson_variance, asymptotic_ci, regression_ci
from .bootstrap import BootstrapConfig, BootstrapResult, CiTable, combootcca
from .core import CcaSolution, canonical_variates, estimate_cca, population_cca
from .errors import (
    ContractViolation,
    DegenerateError,
    InvalidInputError,
    RankDeficiencyError,
    SingularCovarianceError,
)
from .evaluate import EvalSummary, MethodSpec, run_replicates
from .kernels import BACKEND
from .model import CovarianceModel, invert_cca_model
from .pipeline import PreprocessModel, map_directions_to_original, preprocess
from .simgen import GroundTruth, SimDesign, build_truth, sample_mvn

__all__ = [
    "AlignmentStrategy",
    "AlignmentTransform",
    "BACKEND",
    "BootstrapConfig",
    "BootstrapResult",
    "CcaSolution",
    "CiTable",
    "ContractViolation",
    "CovarianceModel",
    "DegenerateError",
    "EvalSummary",
    "GroundTruth",
    "InvalidInputError",
    "MethodSpec",
    "PreprocessModel",
    "RankDeficiencyError",
    "SimDesign",
    "SingularCovarianceError",
    "align",
    "anderson_variance",
    "asymptotic_ci",
    "build_truth",
    "canonical_variates",
    "combootcca",
    "estimate_cca",
    "invert_cca_model",
    "map_directions_to_original",
    "population_cca",
    "preprocess",
    "procrustes_rotation",
    "regression_ci",
    "run_replicates",
    "sample_mvn",
    "solve_assignment",
]
