"""Manufactured problems and exact-error measurement."""

from .fields import AnalyticField, Field, zero_field
from .manufactured import (
    PROBLEMS,
    ProblemError,
    ProblemSpec,
    advection_reaction,
    check_coercivity,
    check_consistency,
    get_problem,
    poisson_tanh,
    polynomial_diffusion,
    transfinite_lift,
)
from .norms import h1_error

__all__ = [
    "AnalyticField",
    "Field",
    "zero_field",
    "PROBLEMS",
    "ProblemError",
    "ProblemSpec",
    "advection_reaction",
    "check_coercivity",
    "check_consistency",
    "get_problem",
    "poisson_tanh",
    "polynomial_diffusion",
    "transfinite_lift",
    "h1_error",
]
