"""Experiment drivers: convergence study, training trace and self-test."""

from .convergence import evaluate_field, fit_slopes, run_convergence, run_mesh
from .selftest import SelfTestError, direct_residuals, run_selftest
from .slopes import SlopeFitError, fit_slope
from .trace import run_trace

__all__ = [
    "evaluate_field",
    "fit_slopes",
    "run_convergence",
    "run_mesh",
    "direct_residuals",
    "run_selftest",
    "SelfTestError",
    "SlopeFitError",
    "fit_slope",
    "run_trace",
]
