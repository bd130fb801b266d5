"""
Mean-preserving elemental projections.

Pi_{E,k} phi = I_{E,k} phi + (1/|E|) int_E (phi - I_{E,k} phi)

I_{E,k} is Lagrange interpolation at the degree-k principal lattice of E;
the correction integral uses the order-7 rule. Polynomials live in the
monomial basis of the reference coordinates of E.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..fem.mesh import Mesh
from ..fem.quadrature import QuadRule, map_rule, reference_rule
from .polynomials import (
    MAX_DEGREE,
    derivative_matrices,
    dimension,
    inverse_vandermonde,
    monomials,
    principal_lattice,
    reference_gram,
)

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]


class ProjectionError(Exception):
    """Exception raised when a projection cannot be formed."""
    pass


def to_reference(mesh: Mesh, elements: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Reference coordinates of physical points (k, ..., 2) on the given elements."""
    origin = mesh.vertices[mesh.triangles[elements, 0]]
    inv = mesh.inverse_jacobians[elements]
    shift = points - origin.reshape(origin.shape[0], *([1] * (points.ndim - 2)), 2)
    return np.einsum("kij,k...j->k...i", inv, shift)


def to_physical(mesh: Mesh, elements: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
    """Physical images (k, m, 2) of (m, 2) reference points on each element."""
    origin = mesh.vertices[mesh.triangles[elements, 0]]
    return origin[:, None, :] + np.einsum("kij,mj->kmi", mesh.jacobians[elements], ref_points)


@dataclass(frozen=True, eq=False)
class PolyProjection:
    """
    A projected polynomial on one element.

    Attributes:
        element: Element id
        degree: Polynomial degree k
        coefficients: (dim,) for scalars or (dim, c) for c-component fields
        origin: First vertex of the element
        inverse_jacobian: Map from physical offsets to reference coordinates
        area: |E|
    """

    element: int
    degree: int
    coefficients: np.ndarray
    origin: np.ndarray
    inverse_jacobian: np.ndarray
    area: float

    @property
    def is_vector(self) -> bool:
        return self.coefficients.ndim == 2

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at physical points (..., 2); (...,) or (..., c)."""
        ref = (np.asarray(points, dtype=float) - self.origin) @ self.inverse_jacobian.T
        basis = monomials(ref, self.degree)
        return np.tensordot(basis, self.coefficients, axes=([-1], [0]))

    def l2_norm(self) -> float:
        """Exact ||p||_{0,E} from the reference Gram matrix."""
        gram = 2.0 * self.area * reference_gram(self.degree)
        c = self.coefficients if self.is_vector else self.coefficients[:, None]
        return float(np.sqrt(max(np.einsum("ic,ij,jc->", c, gram, c), 0.0)))

    def divergence(self) -> "PolyProjection":
        """Divergence of a 2-component projection, same degree basis."""
        if not self.is_vector or self.coefficients.shape[1] != 2:
            raise ProjectionError("divergence needs a 2-component projection")
        coeffs = np.einsum(
            "dc,dij,jc->i", self.inverse_jacobian, derivative_matrices(self.degree), self.coefficients
        )
        return PolyProjection(
            self.element, self.degree, coeffs, self.origin, self.inverse_jacobian, self.area
        )


def _check_degree(degree: int) -> None:
    if not 0 <= degree <= MAX_DEGREE:
        raise ProjectionError(f"projection degree must be in [0, {MAX_DEGREE}], got {degree}")


def _sample(func: PointFunction, points: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(func(points), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ProjectionError(f"non-finite values of the projected function at {what}")
    return values


def project_elements(
    mesh: Mesh,
    degree: int,
    func: PointFunction,
    elements: Optional[np.ndarray] = None,
    rule: Optional[QuadRule] = None,
) -> np.ndarray:
    """
    Coefficients of Pi_{E,k} func for many elements at once.

    Args:
        mesh: Triangulation
        degree: k in [0, 3]
        func: Vectorized over (k, m, 2) points; returns (k, m) or (k, m, c)
        elements: Element ids (all by default)
        rule: Rule of the mean correction (order 7 by default)

    Returns:
        (n_elements, dim) or (n_elements, dim, c) coefficients

    Raises:
        ProjectionError: Bad degree or non-finite function values
    """
    _check_degree(degree)
    elems = np.arange(mesh.n_triangles) if elements is None else np.atleast_1d(elements)
    rule = rule or reference_rule(7)

    nodes = to_physical(mesh, elems, principal_lattice(degree))
    values = _sample(func, nodes, "lattice nodes")
    coeffs = np.einsum("ij,kj...->ki...", inverse_vandermonde(degree), values)

    mapped = map_rule(mesh, rule, elems)
    exact = _sample(func, mapped.points, "quadrature nodes")
    interpolated = np.einsum("mj,kj...->km...", monomials(rule.points, degree), coeffs)
    weights = mapped.weights.reshape(*mapped.weights.shape, *([1] * (exact.ndim - 2)))
    defect = np.sum(weights * (exact - interpolated), axis=1) / mesh.areas[elems].reshape(
        -1, *([1] * (exact.ndim - 2))
    )
    coeffs[:, 0] += defect
    return coeffs


def project(
    mesh: Mesh,
    element: int,
    degree: int,
    func: PointFunction,
    rule: Optional[QuadRule] = None,
) -> PolyProjection:
    """
    Pi_{E,k} func on one element.

    Args:
        func: Point function on (..., 2) physical points

    Raises:
        ProjectionError: Bad degree or non-finite function values
    """
    coeffs = project_elements(mesh, degree, func, np.array([element]), rule)[0]
    return PolyProjection(
        element=int(element),
        degree=degree,
        coefficients=coeffs,
        origin=np.array(mesh.vertices[mesh.triangles[element, 0]]),
        inverse_jacobian=np.array(mesh.inverse_jacobians[element]),
        area=float(mesh.areas[element]),
    )


def divergence_coefficients(mesh: Mesh, coeffs: np.ndarray, degree: int) -> np.ndarray:
    """Divergence of (n_elements, dim, 2) vector projections, one per mesh element."""
    if coeffs.shape != (mesh.n_triangles, dimension(degree), 2):
        raise ProjectionError(f"unexpected coefficient shape {coeffs.shape}")
    return np.einsum(
        "kdc,dij,kjc->ki", mesh.inverse_jacobians, derivative_matrices(degree), coeffs
    )
