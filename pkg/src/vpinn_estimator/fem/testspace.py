"""
The P1 test space V_h.

Test functions are the Lagrange hats phi_i at the interior vertices I_h. The
residual r_i = F_h(phi_i) - a_h(w, phi_i) is assembled element by element with
the assembly quadrature; element contributions are reduced into r in a fixed
order so repeated runs are bit-identical.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ..models import ChMode, NormEquivConstants
from ..problems.fields import Field
from ..problems.manufactured import ProblemSpec
from ..utils.numerics import NumericDomainError, ensure_finite
from .mesh import Mesh, MeshError
from .quadrature import QuadRule, map_rule

logger = logging.getLogger(__name__)

# below this many interior vertices the Gram eigenproblem is solved densely
DENSE_EIGEN_LIMIT = 1500


@dataclass(frozen=True, eq=False)
class ResidualVector:
    """
    Residuals r_i indexed like ``interior_vertices``.

    Attributes:
        values: (|I_h|,) residuals
        interior_vertices: global vertex id of each entry
        mesh_key: fingerprint of the mesh the residuals belong to
    """

    values: np.ndarray
    interior_vertices: np.ndarray
    mesh_key: str

    def __len__(self) -> int:
        return len(self.values)

    def loss(self) -> float:
        """R_h^2 = sum of squared residuals."""
        return float(np.sum(self.values * self.values))

    @property
    def norm(self) -> float:
        """R_h."""
        return float(np.sqrt(self.loss()))


def loss(r: ResidualVector) -> float:
    """R_h^2 of a residual vector."""
    return r.loss()


def hat_gradient(mesh: Mesh, vertex: int, element: int) -> np.ndarray:
    """
    Constant gradient of the hat function of ``vertex`` on ``element``.

    Raises:
        MeshError: If the vertex is not a vertex of the element
    """
    local = mesh.local_vertex(vertex, element)
    return np.array(mesh.hat_gradients[element, local])


def elemental_index_set(mesh: Mesh, element: int) -> np.ndarray:
    """I_h^E: interior vertices of ``element`` (global ids, ascending)."""
    if not 0 <= element < mesh.n_triangles:
        raise MeshError(f"element {element} out of range")
    verts = mesh.triangles[element]
    return np.sort(verts[~mesh.boundary_vertices[verts]])


class ResidualAssembler:
    """
    Quadrature-based residual assembly on one mesh.

    Coefficients, forcing and load terms are sampled once at construction; a
    trial field only has to provide values and gradients at the nodes.
    """

    def __init__(self, mesh: Mesh, data: ProblemSpec, rule: QuadRule):
        """
        Args:
            mesh: Triangulation
            data: Problem coefficients and forcing
            rule: Assembly rule, precision q >= 2

        Raises:
            ValueError: If the rule precision is below 2
            NumericDomainError: If data are not finite at the nodes
        """
        if rule.precision < 2:
            raise ValueError(f"assembly needs quadrature precision >= 2, got {rule.precision}")

        self.mesh = mesh
        self.data = data
        self.rule = rule

        mapped = map_rule(mesh, rule)
        self.points = mapped.points                      # (nt, m, 2)
        self.weights = mapped.weights                    # (nt, m)
        self.hat_values = np.asarray(rule.barycentric)   # (m, 3)
        self.hat_grads = mesh.hat_gradients              # (nt, 3, 2)

        self.mu = ensure_finite(data.mu(self.points), "mu")
        self.beta = ensure_finite(data.beta(self.points), "beta")
        self.sigma = ensure_finite(data.sigma(self.points), "sigma")
        self.f = ensure_finite(data.f(self.points), "f")

        owner = mesh.interior_index[mesh.triangles]      # (nt, 3)
        self.mask = owner >= 0
        self.owner = owner
        self.n_interior = len(mesh.interior_vertices)

        # F_h(phi_j) per element and local vertex
        self.load = np.einsum("nm,nm,mj->nj", self.weights, self.f, self.hat_values)

        logger.debug(
            f"ResidualAssembler on {mesh!r}: {self.points.shape[1]} nodes/element, "
            f"|I_h|={self.n_interior}"
        )

    @property
    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, 2)

    def local_contributions(self, u: np.ndarray, grad_u: np.ndarray) -> np.ndarray:
        """
        Element/local-vertex residual parts, shape (nt, 3).

        Args:
            u: (nt, m) field values at the nodes
            grad_u: (nt, m, 2) field gradients at the nodes
        """
        u = ensure_finite(u, "trial field value")
        grad_u = ensure_finite(grad_u, "trial field gradient")
        flux = self.mu[..., None] * grad_u
        diffusion = np.einsum("nm,nmd,njd->nj", self.weights, flux, self.hat_grads)
        lower = np.sum(self.beta * grad_u, axis=-1) + self.sigma * u
        lower_order = np.einsum("nm,nm,mj->nj", self.weights, lower, self.hat_values)
        return self.load - diffusion - lower_order

    def reduce(self, local: np.ndarray) -> np.ndarray:
        """Sum (nt, 3) contributions into the |I_h| residual entries, in element order."""
        return np.bincount(
            self.owner[self.mask], weights=local[self.mask], minlength=self.n_interior
        )

    def residuals_from_samples(self, u: np.ndarray, grad_u: np.ndarray) -> ResidualVector:
        values = self.reduce(self.local_contributions(u, grad_u))
        return ResidualVector(
            values=values,
            interior_vertices=self.mesh.interior_vertices,
            mesh_key=self.mesh.fingerprint,
        )

    def assemble(self, field: Field) -> ResidualVector:
        """Residual vector of a trial field."""
        value, grad = field.evaluate(self.points)
        return self.residuals_from_samples(value, grad)

    def loss_adjoint(self, r: ResidualVector) -> Tuple[np.ndarray, np.ndarray]:
        """
        Derivatives of R_h^2 with respect to the nodal samples of the field.

        Returns:
            (d/du, d/dgrad_u) with shapes (nt, m) and (nt, m, 2)
        """
        lam = np.where(self.mask, 2.0 * r.values[np.maximum(self.owner, 0)], 0.0)  # (nt, 3)
        # sum_j lam_j * hat_j at every node
        lam_hat = lam @ self.hat_values.T                                         # (nt, m)
        lam_grad = np.einsum("nj,njd->nd", lam, self.hat_grads)                   # (nt, 2)

        u_bar = -self.weights * self.sigma * lam_hat
        grad_bar = -self.weights[..., None] * (
            self.mu[..., None] * lam_grad[:, None, :] + self.beta * lam_hat[..., None]
        )
        return u_bar, grad_bar


def assemble_residuals(mesh: Mesh, field: Field, data: ProblemSpec, rule: QuadRule) -> ResidualVector:
    """r_i = F_h(phi_i) - a_h(field, phi_i) for every interior vertex i."""
    return ResidualAssembler(mesh, data, rule).assemble(field)


# ============================================================================
# Norm equivalence on V_h
# ============================================================================

def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Exact H1-seminorm Gram matrix of the interior hats, (|I_h|, |I_h|)."""
    grads = mesh.hat_gradients
    local = mesh.areas[:, None, None] * np.einsum("njd,nkd->njk", grads, grads)
    owner = mesh.interior_index[mesh.triangles]
    rows = np.repeat(owner[:, :, None], 3, axis=2)
    cols = np.repeat(owner[:, None, :], 3, axis=1)
    keep = (rows >= 0) & (cols >= 0)
    n = len(mesh.interior_vertices)
    return sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()


def _extreme_eigenvalues(matrix: sp.csr_matrix, tol: float) -> Tuple[float, float]:
    n = matrix.shape[0]
    if n <= DENSE_EIGEN_LIMIT:
        eigs = np.linalg.eigvalsh(matrix.toarray())
        return float(eigs[0]), float(eigs[-1])
    largest = eigsh(matrix, k=1, which="LA", tol=tol, return_eigenvectors=False)
    # shift-invert about 0: inverse iteration in Lanczos form
    smallest = eigsh(matrix, k=1, sigma=0.0, which="LM", tol=tol, return_eigenvectors=False)
    return float(smallest[0]), float(largest[0])


def measure_norm_constants(mesh: Mesh, tol: float = 1e-10) -> NormEquivConstants:
    """
    c_h and C_h from the generalized eigenproblem I v = lambda S v.

    With S the stiffness Gram matrix, lambda = 1/eig(S), hence
    C_h = 1/sqrt(eig_min(S)) and c_h = 1/sqrt(eig_max(S)).

    Raises:
        MeshError: If the mesh has no interior vertex
        NumericDomainError: If S is singular
    """
    if len(mesh.interior_vertices) == 0:
        raise MeshError("norm constants need at least one interior vertex")
    s_min, s_max = _extreme_eigenvalues(stiffness_matrix(mesh), tol)
    ensure_finite([s_min, s_max], "stiffness eigenvalues")
    if s_min <= 0.0:
        raise NumericDomainError(f"stiffness matrix is singular (eig_min={s_min:.3e})")
    constants = NormEquivConstants(c_h=1.0 / np.sqrt(s_max), C_h=1.0 / np.sqrt(s_min))
    logger.debug(f"Norm constants on {mesh!r}: c_h={constants.c_h:.6g}, C_h={constants.C_h:.6g}")
    return constants


def asymptotic_norm_constants(mesh: Mesh) -> NormEquivConstants:
    """Surrogates C_h = h^-1 and c_h = h^0 (capped at C_h) for two dimensions."""
    upper = 1.0 / mesh.h
    return NormEquivConstants(c_h=min(1.0, upper), C_h=upper, mode="asymptotic")


def norm_constants(mesh: Mesh, mode: ChMode = "measured") -> NormEquivConstants:
    if mode == "measured":
        return measure_norm_constants(mesh)
    if mode == "asymptotic":
        return asymptotic_norm_constants(mesh)
    raise ValueError(f"unknown C_h mode {mode!r}")
