"""Aggregation of the elemental terms into the global estimator."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

from ..fem.mesh import Mesh
from ..fem.quadrature import QuadRule
from ..fem.testspace import ResidualVector
from ..models import NormEquivConstants
from ..problems.fields import Field
from ..problems.manufactured import ProblemSpec
from .local import LocalEstimator, eta_loss_all, eta_loss_global

logger = logging.getLogger(__name__)

BREAKDOWN_COLUMNS = [
    "E", "eta_res", "eta_loss",
    "eta_coef_1", "eta_coef_2", "eta_coef_3", "eta_coef_4", "eta_coef_5", "eta_coef_6",
    "eta_rhs_1", "eta_rhs_2", "eta_E",
]


class EstimatorError(Exception):
    """Exception raised for invalid estimator inputs or results."""
    pass


def _root_sum_squares(values: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.asarray(values) ** 2)))


@dataclass(frozen=True, eq=False)
class EstimatorBreakdown:
    """
    Elemental and global estimator values on one mesh.

    Attributes:
        eta_res_E: (nt,) residual term per element
        eta_loss_E: (nt,) localized loss term per element
        eta_coef_E: (nt, 6) coefficient oscillation terms
        eta_rhs_E: (nt, 2) forcing oscillation terms
        eta_loss: Global loss term C_h R_h
        constants: Norm-equivalence constants used for the loss terms
    """

    eta_res_E: np.ndarray
    eta_loss_E: np.ndarray
    eta_coef_E: np.ndarray
    eta_rhs_E: np.ndarray
    eta_loss: float
    constants: NormEquivConstants
    mesh_key: str = ""

    @property
    def n_elements(self) -> int:
        return len(self.eta_res_E)

    @property
    def eta_res(self) -> float:
        return _root_sum_squares(self.eta_res_E)

    @property
    def eta_coef(self) -> float:
        return _root_sum_squares(self.eta_coef_E)

    @property
    def eta_rhs(self) -> float:
        return _root_sum_squares(self.eta_rhs_E)

    @property
    def eta(self) -> float:
        """eta_res + eta_loss + eta_coef + eta_rhs."""
        return self.eta_res + self.eta_loss + self.eta_coef + self.eta_rhs

    @property
    def eta_E(self) -> np.ndarray:
        """Elemental eta(E), the root of the sum of all squared elemental terms."""
        squares = (
            self.eta_res_E ** 2
            + self.eta_loss_E ** 2
            + np.sum(self.eta_coef_E ** 2, axis=1)
            + np.sum(self.eta_rhs_E ** 2, axis=1)
        )
        return np.sqrt(squares)

    @property
    def eta_local(self) -> float:
        """(sum_E eta(E)^2)^(1/2)."""
        return _root_sum_squares(self.eta_E)

    @property
    def scaled_local_loss(self) -> np.ndarray:
        """(c_h / C_h) eta_loss(E), the loss share of the local lower bound."""
        return (self.constants.c_h / self.constants.C_h) * self.eta_loss_E

    def summary(self) -> Dict[str, float]:
        return {
            "eta_res": self.eta_res,
            "eta_loss": self.eta_loss,
            "eta_coef": self.eta_coef,
            "eta_rhs": self.eta_rhs,
            "eta": self.eta,
            "eta_local": self.eta_local,
        }

    def rows(self) -> List[Dict[str, Union[int, str, float]]]:
        """One row per element plus a trailing ``global`` row."""
        eta_E = self.eta_E
        rows: List[Dict[str, Union[int, str, float]]] = []
        for E in range(self.n_elements):
            row: Dict[str, Union[int, str, float]] = {
                "E": E,
                "eta_res": float(self.eta_res_E[E]),
                "eta_loss": float(self.eta_loss_E[E]),
            }
            for k in range(6):
                row[f"eta_coef_{k + 1}"] = float(self.eta_coef_E[E, k])
            row["eta_rhs_1"] = float(self.eta_rhs_E[E, 0])
            row["eta_rhs_2"] = float(self.eta_rhs_E[E, 1])
            row["eta_E"] = float(eta_E[E])
            rows.append(row)

        total: Dict[str, Union[int, str, float]] = {
            "E": "global",
            "eta_res": self.eta_res,
            "eta_loss": self.eta_loss,
        }
        for k in range(6):
            total[f"eta_coef_{k + 1}"] = _root_sum_squares(self.eta_coef_E[:, k])
        total["eta_rhs_1"] = _root_sum_squares(self.eta_rhs_E[:, 0])
        total["eta_rhs_2"] = _root_sum_squares(self.eta_rhs_E[:, 1])
        total["eta_E"] = self.eta_local
        rows.append(total)
        return rows

    def check_invariants(self, rtol: float = 1e-12) -> None:
        """
        Raise EstimatorError unless every value is finite and nonnegative
        and the loss localization over-counts.
        """
        for name in ("eta_res_E", "eta_loss_E", "eta_coef_E", "eta_rhs_E"):
            values = getattr(self, name)
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise EstimatorError(f"{name} has negative or non-finite entries")
        if not np.isfinite(self.eta_loss) or self.eta_loss < 0:
            raise EstimatorError(f"eta_loss is {self.eta_loss}")
        if self.eta_loss ** 2 > np.sum(self.eta_loss_E ** 2) * (1.0 + rtol) + 1e-300:
            raise EstimatorError("global eta_loss exceeds its localization")


def assemble_breakdown(
    mesh: Mesh,
    field: Field,
    data: ProblemSpec,
    r: ResidualVector,
    constants: Union[NormEquivConstants, float],
    assembly_rule: Optional[QuadRule] = None,
    verification_rule: Optional[QuadRule] = None,
) -> EstimatorBreakdown:
    """
    Every elemental term plus the global aggregates.

    Args:
        constants: Norm-equivalence constants, or C_h alone (then c_h = C_h)

    Raises:
        EstimatorError: If a term is negative or not finite
        MeshError: If r belongs to another mesh
    """
    if not isinstance(constants, NormEquivConstants):
        constants = NormEquivConstants(c_h=float(constants), C_h=float(constants))
    local = LocalEstimator(mesh, field, data, assembly_rule, verification_rule)
    breakdown = EstimatorBreakdown(
        eta_res_E=local.eta_res_values,
        eta_loss_E=eta_loss_all(mesh, r, constants.C_h),
        eta_coef_E=local.eta_coef_values,
        eta_rhs_E=local.eta_rhs_values,
        eta_loss=eta_loss_global(r, constants.C_h),
        constants=constants,
        mesh_key=mesh.fingerprint,
    )
    breakdown.check_invariants()
    logger.debug(
        f"Estimator on {mesh!r}: eta={breakdown.eta:.4e} (res {breakdown.eta_res:.3e}, "
        f"loss {breakdown.eta_loss:.3e}, coef {breakdown.eta_coef:.3e}, rhs {breakdown.eta_rhs:.3e})"
    )
    return breakdown


def efficiency_index(breakdown: Union[EstimatorBreakdown, float], true_error: float) -> float:
    """
    eta / |u - u_NN|_1.

    Raises:
        EstimatorError: If the true error is zero, negative or not finite
    """
    if not np.isfinite(true_error) or true_error <= 0.0:
        raise EstimatorError(f"efficiency index needs a positive true error, got {true_error}")
    eta = breakdown.eta if isinstance(breakdown, EstimatorBreakdown) else float(breakdown)
    return eta / true_error
