"""Residual-type a posteriori error estimator."""

from .breakdown import (
    BREAKDOWN_COLUMNS,
    EstimatorBreakdown,
    EstimatorError,
    assemble_breakdown,
    efficiency_index,
)
from .local import (
    EdgeJump,
    LocalEstimator,
    bulk_residual,
    edge_jump,
    eta_coef,
    eta_loss_global,
    eta_loss_local,
    eta_res,
    eta_rhs,
)
from .projection import PolyProjection, ProjectionError, project, project_elements

__all__ = [
    "BREAKDOWN_COLUMNS",
    "EstimatorBreakdown",
    "EstimatorError",
    "assemble_breakdown",
    "efficiency_index",
    "EdgeJump",
    "LocalEstimator",
    "bulk_residual",
    "edge_jump",
    "eta_coef",
    "eta_loss_global",
    "eta_loss_local",
    "eta_res",
    "eta_rhs",
    "PolyProjection",
    "ProjectionError",
    "project",
    "project_elements",
]
