"""
Elemental estimator terms.

For every element E (q = assembly precision):
- eta_res(E)  = h_E ||bulk_E||_{0,E} + h_E^(1/2) sum_{e in dE} ||jump_e||_{0,e}
- eta_rhs(E)  = (h_E ||f - Pi_{q-1} f||_{0,E},
                 h_E ||f - Pi_{q-1} f||_{0,E,w} + ||f - Pi_q f||_{0,E,w})
- eta_coef(E) = six oscillation norms of mu grad u, beta . grad u, sigma u
- eta_loss(E) = C_h (sum_{i in I_h^E} r_i^2)^(1/2)

||.||_{0,E} uses the order-7 rule, ||.||_{0,E,w} the nodes and weights of the
assembly rule. Polynomial norms (bulk, jumps) are exact.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ..fem.mesh import Mesh, MeshError
from ..fem.quadrature import QuadRule, gauss_legendre_unit, map_rule, reference_rule
from ..fem.testspace import ResidualVector, elemental_index_set
from ..problems.fields import Field
from ..problems.manufactured import ProblemSpec
from .polynomials import embed, monomials, reference_gram
from .projection import (
    PolyProjection,
    divergence_coefficients,
    project_elements,
    to_reference,
)

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class EdgeJump:
    """
    Normal flux jump on one edge, sampled at Gauss points.

    Attributes:
        edge: Edge id
        nodes: (g,) parameters in [0, 1] along the edge
        weights: (g,) Gauss weights on [0, 1]
        values: (g,) jump values (zero on boundary edges)
        length: |e|
        degree: Polynomial degree of the jump
    """

    edge: int
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    length: float
    degree: int

    def l2_norm(self) -> float:
        """||jump||_{0,e}; the Gauss rule is exact for the squared jump."""
        return float(np.sqrt(self.length * np.sum(self.weights * self.values ** 2)))

    def polynomial(self) -> np.polynomial.Polynomial:
        """The jump as a polynomial in the edge parameter t in [0, 1]."""
        return np.polynomial.Polynomial.fit(self.nodes, self.values, self.degree, domain=[0.0, 1.0])


def _field_quantities(field: Field, data: ProblemSpec):
    """Point functions for mu grad u, beta . grad u and sigma u."""

    def flux(x):
        _, grad = field.evaluate(x)
        return data.mu(x)[..., None] * grad

    def advection(x):
        _, grad = field.evaluate(x)
        return np.sum(data.beta(x) * grad, axis=-1)

    def reaction(x):
        value, _ = field.evaluate(x)
        return data.sigma(x) * value

    return flux, advection, reaction


class LocalEstimator:
    """
    All elemental terms of one (mesh, field, data) triple.

    Projections are computed once for every element; per-element accessors
    then read from the cached arrays.
    """

    def __init__(
        self,
        mesh: Mesh,
        field: Field,
        data: ProblemSpec,
        assembly_rule: Optional[QuadRule] = None,
        verification_rule: Optional[QuadRule] = None,
    ):
        self.mesh = mesh
        self.field = field
        self.data = data
        self.assembly_rule = assembly_rule or reference_rule(3)
        self.verification_rule = verification_rule or reference_rule(7)
        self.q = self.assembly_rule.precision
        q = self.q

        flux, advection, reaction = _field_quantities(field, data)
        vrule = self.verification_rule

        self.flux_q = project_elements(mesh, q, flux, rule=vrule)                # (nt, dq, 2)
        self.f_qm1 = project_elements(mesh, q - 1, data.f, rule=vrule)
        self.f_q = project_elements(mesh, q, data.f, rule=vrule)
        self.adv_qm1 = project_elements(mesh, q - 1, advection, rule=vrule)
        self.adv_q = project_elements(mesh, q, advection, rule=vrule)
        self.react_qm1 = project_elements(mesh, q - 1, reaction, rule=vrule)
        self.react_q = project_elements(mesh, q, reaction, rule=vrule)

        self.bulk = (
            embed(self.f_qm1, q, axis=1)
            + divergence_coefficients(mesh, self.flux_q, q)
            - embed(self.adv_qm1, q, axis=1)
            - embed(self.react_qm1, q, axis=1)
        )

        h = mesh.diameters
        self.bulk_norms = self._polynomial_norms(self.bulk)
        self.jump_norms = self._jump_norms()
        jump_sums = self.jump_norms[mesh.triangle_edges].sum(axis=1)
        self.eta_res_values = h * self.bulk_norms + np.sqrt(h) * jump_sums

        cont = self._oscillation(vrule)
        disc = self._oscillation(self.assembly_rule)
        self.eta_rhs_values = np.column_stack([
            h * cont(data.f, self.f_qm1),
            h * disc(data.f, self.f_qm1) + disc(data.f, self.f_q),
        ])
        self.eta_coef_values = np.column_stack([
            cont(flux, self.flux_q),
            h * cont(advection, self.adv_qm1),
            h * cont(reaction, self.react_qm1),
            disc(flux, self.flux_q),
            h * disc(advection, self.adv_qm1) + disc(advection, self.adv_q),
            h * disc(reaction, self.react_qm1) + disc(reaction, self.react_q),
        ])
        logger.debug(
            f"LocalEstimator on {mesh!r}: max eta_res(E)={self.eta_res_values.max():.3e}"
        )

    # ------------------------------------------------------------------
    # Norms
    # ------------------------------------------------------------------

    def _polynomial_norms(self, coeffs: np.ndarray) -> np.ndarray:
        gram = reference_gram(self.q)
        squares = 2.0 * self.mesh.areas * np.einsum("ki,ij,kj->k", coeffs, gram, coeffs)
        return np.sqrt(np.maximum(squares, 0.0))

    def _oscillation(self, rule: QuadRule) -> Callable[[PointFunction, np.ndarray], np.ndarray]:
        """||func - p||_{0,E} per element with the given rule's nodes and weights."""
        mapped = map_rule(self.mesh, rule)

        def norms(func: PointFunction, coeffs: np.ndarray) -> np.ndarray:
            degree = _degree_of(coeffs.shape[1])
            values = np.asarray(func(mapped.points), dtype=float)
            poly = np.einsum("mj,kj...->km...", monomials(rule.points, degree), coeffs)
            diff = values - poly
            if diff.ndim == 3:
                diff = np.sqrt(np.sum(diff * diff, axis=-1))
            return np.sqrt(np.sum(mapped.weights * diff * diff, axis=1))

        return norms

    def _sample_jumps(self, edges: np.ndarray):
        mesh = self.mesh
        nodes, weights = gauss_legendre_unit(self.q + 1)
        a = mesh.vertices[mesh.edges[edges, 0]]
        b = mesh.vertices[mesh.edges[edges, 1]]
        points = a[:, None, :] + nodes[None, :, None] * (b - a)[:, None, :]   # (k, g, 2)

        first = mesh.edge_triangles[edges, 0]
        second = mesh.edge_triangles[edges, 1]
        tangent = b - a
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / mesh.edge_lengths[edges, None]
        centroid = mesh.vertices[mesh.triangles[first]].mean(axis=1)
        inward = np.sum(normal * (centroid - a), axis=1) > 0
        normal[inward] *= -1.0

        values = np.zeros((len(edges), len(nodes)))
        interior = second >= 0
        if np.any(interior):
            pts = points[interior]
            f1 = self._flux_at(first[interior], pts)
            f2 = self._flux_at(second[interior], pts)
            values[interior] = np.sum((f1 - f2) * normal[interior, None, :], axis=-1)
        return nodes, weights, values

    def _flux_at(self, elements: np.ndarray, points: np.ndarray) -> np.ndarray:
        ref = to_reference(self.mesh, elements, points)
        return np.einsum("kgj,kjc->kgc", monomials(ref, self.q), self.flux_q[elements])

    def _jump_norms(self) -> np.ndarray:
        edges = np.arange(self.mesh.n_edges)
        _, weights, values = self._sample_jumps(edges)
        return np.sqrt(self.mesh.edge_lengths * np.sum(weights * values ** 2, axis=1))

    # ------------------------------------------------------------------
    # Per-element and per-edge accessors
    # ------------------------------------------------------------------

    def _check_element(self, element: int) -> int:
        if not 0 <= element < self.mesh.n_triangles:
            raise MeshError(f"element {element} out of range")
        return int(element)

    def bulk_residual(self, element: int) -> PolyProjection:
        """bulk_E as a degree-q polynomial on E."""
        E = self._check_element(element)
        return PolyProjection(
            element=E,
            degree=self.q,
            coefficients=self.bulk[E].copy(),
            origin=np.array(self.mesh.vertices[self.mesh.triangles[E, 0]]),
            inverse_jacobian=np.array(self.mesh.inverse_jacobians[E]),
            area=float(self.mesh.areas[E]),
        )

    def edge_jump(self, edge: int) -> EdgeJump:
        """Flux jump across ``edge``; identically zero on boundary edges."""
        if not 0 <= edge < self.mesh.n_edges:
            raise MeshError(f"edge {edge} out of range")
        nodes, weights, values = self._sample_jumps(np.array([edge]))
        return EdgeJump(
            edge=int(edge),
            nodes=nodes,
            weights=weights,
            values=values[0],
            length=float(self.mesh.edge_lengths[edge]),
            degree=self.q,
        )

    def eta_res(self, element: int) -> float:
        return float(self.eta_res_values[self._check_element(element)])

    def eta_rhs(self, element: int) -> Tuple[float, float]:
        row = self.eta_rhs_values[self._check_element(element)]
        return float(row[0]), float(row[1])

    def eta_coef(self, element: int) -> Tuple[float, ...]:
        return tuple(float(v) for v in self.eta_coef_values[self._check_element(element)])


def _degree_of(dim: int) -> int:
    degree = int(round((np.sqrt(8 * dim + 1) - 3) / 2))
    if (degree + 1) * (degree + 2) // 2 != dim:
        raise ValueError(f"{dim} is not the dimension of a full polynomial space")
    return degree


# ============================================================================
# Functional interface
# ============================================================================

def bulk_residual(mesh: Mesh, element: int, field: Field, data: ProblemSpec) -> PolyProjection:
    return LocalEstimator(mesh, field, data).bulk_residual(element)


def edge_jump(mesh: Mesh, edge: int, field: Field, data: ProblemSpec) -> EdgeJump:
    return LocalEstimator(mesh, field, data).edge_jump(edge)


def eta_res(mesh: Mesh, element: int, field: Field, data: ProblemSpec) -> float:
    return LocalEstimator(mesh, field, data).eta_res(element)


def eta_coef(mesh: Mesh, element: int, field: Field, data: ProblemSpec) -> Tuple[float, ...]:
    return LocalEstimator(mesh, field, data).eta_coef(element)


def eta_rhs(
    mesh: Mesh,
    element: int,
    data: ProblemSpec,
    assembly_rule: Optional[QuadRule] = None,
    verification_rule: Optional[QuadRule] = None,
) -> Tuple[float, float]:
    """(eta_rhs_1, eta_rhs_2) of one element; depends on f only."""
    assembly_rule = assembly_rule or reference_rule(3)
    vrule = verification_rule or reference_rule(7)
    q = assembly_rule.precision
    elems = np.array([element])
    h = float(mesh.diameters[element])

    def norm(rule: QuadRule, degree: int) -> float:
        coeffs = project_elements(mesh, degree, data.f, elems, vrule)
        mapped = map_rule(mesh, rule, elems)
        diff = data.f(mapped.points) - np.einsum("mj,kj->km", monomials(rule.points, degree), coeffs)
        return float(np.sqrt(np.sum(mapped.weights * diff * diff)))

    return h * norm(vrule, q - 1), h * norm(assembly_rule, q - 1) + norm(assembly_rule, q)


def eta_loss_local(mesh: Mesh, element: int, r: ResidualVector, C_h: float) -> float:
    """C_h (sum of r_i^2 over the interior vertices of E)^(1/2)."""
    _check_residual(mesh, r)
    positions = mesh.interior_index[elemental_index_set(mesh, element)]
    values = r.values[positions]
    return float(C_h * np.sqrt(np.sum(values * values)))


def eta_loss_all(mesh: Mesh, r: ResidualVector, C_h: float) -> np.ndarray:
    """eta_loss(E) for every element."""
    _check_residual(mesh, r)
    owner = mesh.interior_index[mesh.triangles]
    squares = np.where(owner >= 0, r.values[np.maximum(owner, 0)] ** 2, 0.0)
    return C_h * np.sqrt(squares.sum(axis=1))


def eta_loss_global(r: ResidualVector, C_h: float) -> float:
    """C_h R_h."""
    return float(C_h * np.sqrt(r.loss()))


def _check_residual(mesh: Mesh, r: ResidualVector) -> None:
    if r.mesh_key != mesh.fingerprint:
        raise MeshError("residual vector was assembled on a different mesh")
