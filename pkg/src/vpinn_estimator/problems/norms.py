"""Exact-error measurement in the H1 seminorm."""

import logging
from typing import Optional

import numpy as np

from ..fem.mesh import Mesh
from ..fem.quadrature import QuadRule, map_rule, reference_rule
from ..utils.numerics import ensure_finite
from .fields import Field
from .manufactured import ProblemError, ProblemSpec

logger = logging.getLogger(__name__)


def h1_seminorm_sq_per_element(
    mesh: Mesh,
    gradient_fn,
    rule: Optional[QuadRule] = None,
) -> np.ndarray:
    """Per-element integrals of |gradient_fn|^2, shape (nt,)."""
    rule = rule or reference_rule(7)
    mapped = map_rule(mesh, rule)
    grads = ensure_finite(gradient_fn(mapped.points), "gradient")
    return np.sum(np.sum(grads * grads, axis=-1) * mapped.weights, axis=1)


def h1_error(
    mesh: Mesh,
    field: Field,
    spec: ProblemSpec,
    rule: Optional[QuadRule] = None,
) -> float:
    """
    |u - u_NN|_{1,Omega} with the order-7 rule on every element.

    Raises:
        ProblemError: If the problem carries no exact gradient
    """
    if spec.exact_grad is None:
        raise ProblemError(f"problem {spec.name!r} has no exact gradient; H1 error undefined")

    def diff(points):
        _, grad = field.evaluate(points)
        return spec.exact_grad(points) - grad

    per_element = h1_seminorm_sq_per_element(mesh, diff, rule)
    return float(np.sqrt(np.sum(per_element)))
