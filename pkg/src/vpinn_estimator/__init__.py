"""
vpinn-estimator

Variational physics-informed neural networks for second-order elliptic
problems on triangulated domains, with a residual-type a posteriori error
estimator for the trained network.
"""

__version__ = "0.1.0"

# Core models - convenient imports
from .models import (
    NormEquivConstants,
    TraceRecord,
    TrainingTrace,
    ConvergenceRow,
    ConvergenceResult,
)
from .config import ConfigError, ExperimentConfig, load_config

# Numerics
from .fem import Mesh, build_structured_unit_square, reference_rule, assemble_residuals
from .nn import MLPParams, TrialField, init_params, train
from .estimator import EstimatorBreakdown, assemble_breakdown, efficiency_index
from .problems import ProblemSpec, get_problem, h1_error

__all__ = [
    # Models
    "NormEquivConstants",
    "TraceRecord",
    "TrainingTrace",
    "ConvergenceRow",
    "ConvergenceResult",
    # Config
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    # Numerics
    "Mesh",
    "build_structured_unit_square",
    "reference_rule",
    "assemble_residuals",
    "MLPParams",
    "TrialField",
    "init_params",
    "train",
    "EstimatorBreakdown",
    "assemble_breakdown",
    "efficiency_index",
    "ProblemSpec",
    "get_problem",
    "h1_error",
]
