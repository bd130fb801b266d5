"""
Full-batch minimization of the VPINN loss R_h^2.

Every step uses all residuals. The parameters with the smallest R_h seen
during the run are returned, together with a trace of the estimator terms
taken every ``checkpoint_every`` epochs.
"""

import logging
import time
from typing import Optional, Tuple

import numpy as np

from ..config import TrainConfig
from ..estimator.breakdown import assemble_breakdown
from ..fem.mesh import Mesh
from ..fem.quadrature import QuadRule, reference_rule
from ..fem.testspace import ResidualAssembler, norm_constants
from ..models import NormEquivConstants, TraceRecord, TrainingTrace
from ..problems.manufactured import ProblemSpec
from ..problems.norms import h1_error
from .adam import Adam
from .network import MLPParams, TrialField, loss_gradient

logger = logging.getLogger(__name__)


class TrainingDivergedError(ArithmeticError):
    """Raised when R_h grows past the divergence guard; carries the partial trace."""

    def __init__(self, message: str, trace: TrainingTrace):
        super().__init__(message)
        self.trace = trace


def checkpoint_record(
    epoch: int,
    field: TrialField,
    mesh: Mesh,
    data: ProblemSpec,
    assembler: ResidualAssembler,
    constants: NormEquivConstants,
    verification_rule: Optional[QuadRule] = None,
) -> TraceRecord:
    """Estimator terms and true error of the current field."""
    r = assembler.assemble(field)
    breakdown = assemble_breakdown(
        mesh, field, data, r, constants, assembler.rule, verification_rule
    )
    error = h1_error(mesh, field, data, verification_rule) if data.has_exact else None
    return TraceRecord(
        epoch=epoch,
        R_h=r.norm,
        eta_rhs=breakdown.eta_rhs,
        eta_coef=breakdown.eta_coef,
        eta_res=breakdown.eta_res,
        eta_loss=breakdown.eta_loss,
        eta=breakdown.eta,
        h1_error=error,
    )


def train(
    mesh: Mesh,
    data: ProblemSpec,
    init: MLPParams,
    cfg: TrainConfig,
    rule: Optional[QuadRule] = None,
    constants: Optional[NormEquivConstants] = None,
    verification_rule: Optional[QuadRule] = None,
) -> Tuple[MLPParams, TrainingTrace]:
    """
    Minimize R_h^2 over the network parameters.

    Args:
        mesh: Triangulation defining the test space
        data: Problem data (its lift is used for the trial field)
        init: Initial parameters (not modified)
        cfg: Optimizer and loop settings
        rule: Assembly rule (precision 3 by default)
        constants: Norm constants for the traced eta_loss (measured by default)
        verification_rule: Rule of the continuous norms (order 7 by default)

    Returns:
        (best parameters, trace)

    Raises:
        TrainingDivergedError: If R_h exceeds divergence_factor times its initial value
        NumericDomainError: On non-finite values during assembly
    """
    rule = rule or reference_rule(3)
    if rule.precision < 2:
        raise ValueError(f"training needs quadrature precision >= 2, got {rule.precision}")
    constants = constants or norm_constants(mesh)
    assembler = ResidualAssembler(mesh, data, rule)
    field = TrialField.for_problem(init, data)
    optimizer = Adam(init.n_params, cfg)

    trace = TrainingTrace(mesh=mesh.fingerprint)
    theta = init.flatten()
    best_params, best_R = init.copy(), np.inf
    initial_R = None

    logger.info(
        f"Training {list(init.widths)} ({init.n_params} parameters) on {mesh!r} "
        f"for {cfg.epochs} epochs"
    )
    start = time.time()

    for epoch in range(cfg.epochs + 1):
        params = init.with_flat(theta)
        field = field.with_params(params)
        loss_value, grad = loss_gradient(field, mesh, data, rule, assembler)
        R = float(np.sqrt(loss_value))

        if initial_R is None:
            initial_R = R
            trace.initial_R_h = R
        elif R > cfg.divergence_factor * initial_R:
            raise TrainingDivergedError(
                f"R_h={R:.3e} at epoch {epoch} exceeds {cfg.divergence_factor:g} x initial {initial_R:.3e}",
                trace,
            )

        if R < best_R:
            best_params, best_R = params, R
            trace.best_epoch, trace.best_R_h = epoch, R

        converged = R <= cfg.tolerance
        if epoch % cfg.checkpoint_every == 0 or (converged and epoch < cfg.epochs):
            record = checkpoint_record(
                epoch, field, mesh, data, assembler, constants, verification_rule
            )
            trace.append(record)
            logger.debug(
                f"epoch {epoch}: R_h={record.R_h:.4e} eta={record.eta:.4e} "
                f"lr={cfg.learning_rate_at(epoch):.2e}"
            )

        if converged:
            trace.stopped_early = epoch < cfg.epochs
            logger.info(f"R_h={R:.3e} <= tolerance at epoch {epoch}; stopping")
            break
        if epoch == cfg.epochs:
            break
        theta = optimizer.step(theta, grad, epoch)

    logger.info(
        f"Training finished in {time.time() - start:.1f}s: best R_h={best_R:.4e} "
        f"at epoch {trace.best_epoch} (initial {initial_R:.4e})"
    )
    return best_params, trace
