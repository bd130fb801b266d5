"""
Conforming triangulations of polygonal domains.

A Mesh stores vertex coordinates and counterclockwise vertex triples, plus
the combinatorics the test space and the estimator need:
- edges as sorted vertex pairs with their (one or two) adjacent triangles
- the three edges of each triangle (local edge j is opposite local vertex j)
- boundary vertex flags and element diameters h_E
"""

import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(Exception):
    """Exception raised for invalid mesh input or queries."""
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Immutable conforming triangulation.

    Attributes:
        vertices: (nv, 2) float coordinates
        triangles: (nt, 3) vertex indices, counterclockwise
        edges: (ne, 2) sorted vertex index pairs
        edge_triangles: (ne, 2) adjacent triangles, -1 in slot 1 for boundary edges
        triangle_edges: (nt, 3) edge ids, local edge j opposite local vertex j
        boundary_vertices: (nv,) bool flags for vertices on the boundary
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_triangles: np.ndarray
    triangle_edges: np.ndarray
    boundary_vertices: np.ndarray
    name: str = field(default="mesh")

    @classmethod
    def from_triangles(cls, vertices, triangles, name: str = "mesh") -> "Mesh":
        """
        Build a mesh and its edge topology from raw arrays.

        Clockwise triangles are reoriented; degenerate triangles and edges
        shared by more than two triangles are rejected.

        Raises:
            MeshError: If the input is not a valid conforming triangulation
        """
        verts = np.asarray(vertices, dtype=float)
        tris = np.array(triangles, dtype=np.int64)

        if verts.ndim != 2 or verts.shape[1] != 2:
            raise MeshError(f"vertices must have shape (nv, 2), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3 or len(tris) == 0:
            raise MeshError(f"triangles must have shape (nt, 3), got {tris.shape}")
        if tris.min() < 0 or tris.max() >= len(verts):
            raise MeshError("triangle vertex index out of range")

        signed = _signed_areas(verts, tris)
        if np.any(np.abs(signed) <= 0.0):
            raise MeshError(f"{int(np.sum(signed == 0.0))} degenerate triangle(s)")
        flip = signed < 0
        if np.any(flip):
            logger.debug(f"Reorienting {int(flip.sum())} clockwise triangle(s)")
            tris[flip] = tris[flip][:, [0, 2, 1]]

        nt = len(tris)
        local = np.stack([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1)
        keys = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        ne = len(edges)

        counts = np.bincount(inverse, minlength=ne)
        if counts.max() > 2:
            raise MeshError("non-conforming input: an edge is shared by more than two triangles")

        owner = np.repeat(np.arange(nt), 3)
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        slot = np.arange(len(order)) - np.searchsorted(sorted_edges, sorted_edges)
        edge_triangles = np.full((ne, 2), -1, dtype=np.int64)
        edge_triangles[sorted_edges, slot] = owner[order]

        boundary = np.zeros(len(verts), dtype=bool)
        boundary[edges[counts == 1].ravel()] = True

        return cls(
            vertices=_frozen(verts),
            triangles=_frozen(tris),
            edges=_frozen(edges.astype(np.int64)),
            edge_triangles=_frozen(edge_triangles),
            triangle_edges=_frozen(inverse.reshape(nt, 3).astype(np.int64)),
            boundary_vertices=_frozen(boundary),
            name=name,
        )

    # ------------------------------------------------------------------
    # Sizes
    # ------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    @cached_property
    def areas(self) -> np.ndarray:
        """Element areas |E|."""
        return _frozen(_signed_areas(self.vertices, self.triangles))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return _frozen(np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def diameters(self) -> np.ndarray:
        """h_E: the longest edge of each element."""
        return _frozen(self.edge_lengths[self.triangle_edges].max(axis=1))

    @property
    def h(self) -> float:
        """Global meshsize max_E h_E."""
        return float(self.diameters.max())

    @cached_property
    def inradii(self) -> np.ndarray:
        perimeter = self.edge_lengths[self.triangle_edges].sum(axis=1)
        return _frozen(2.0 * self.areas / perimeter)

    @property
    def shape_regularity(self) -> float:
        """max_E h_E / inradius_E."""
        return float(np.max(self.diameters / self.inradii))

    @cached_property
    def jacobians(self) -> np.ndarray:
        """(nt, 2, 2) affine maps from the reference triangle; columns v1-v0, v2-v0."""
        p = self.vertices[self.triangles]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return _frozen(jac)

    @cached_property
    def inverse_jacobians(self) -> np.ndarray:
        return _frozen(np.linalg.inv(self.jacobians))

    @cached_property
    def hat_gradients(self) -> np.ndarray:
        """(nt, 3, 2) constant gradients of the three local hat functions."""
        p = self.vertices[self.triangles]
        nxt = p[:, [1, 2, 0]]
        prv = p[:, [2, 0, 1]]
        grads = np.stack([nxt[..., 1] - prv[..., 1], prv[..., 0] - nxt[..., 0]], axis=2)
        return _frozen(grads / (2.0 * self.areas)[:, None, None])

    # ------------------------------------------------------------------
    # Combinatorics
    # ------------------------------------------------------------------

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        """Index set I_h: vertices not on the boundary, ascending."""
        return _frozen(np.flatnonzero(~self.boundary_vertices))

    @cached_property
    def interior_index(self) -> np.ndarray:
        """Map global vertex -> position in I_h, -1 for boundary vertices."""
        index = np.full(self.n_vertices, -1, dtype=np.int64)
        index[self.interior_vertices] = np.arange(len(self.interior_vertices))
        return _frozen(index)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return _frozen(self.edge_triangles[:, 1] < 0)

    def local_vertex(self, vertex: int, element: int) -> int:
        """
        Position of ``vertex`` inside ``element``.

        Raises:
            MeshError: If the vertex does not belong to the element
        """
        hits = np.flatnonzero(self.triangles[element] == vertex)
        if len(hits) == 0:
            raise MeshError(f"vertex {vertex} is not a vertex of element {element}")
        return int(hits[0])

    @cached_property
    def fingerprint(self) -> str:
        """Short content hash identifying this mesh."""
        digest = hashlib.sha1()
        digest.update(self.vertices.tobytes())
        digest.update(self.triangles.tobytes())
        return f"{self.n_vertices}v{self.n_triangles}t-{digest.hexdigest()[:12]}"

    def __repr__(self) -> str:
        return (
            f"Mesh(name={self.name!r}, nv={self.n_vertices}, nt={self.n_triangles}, "
            f"ne={self.n_edges}, h={self.h:.4g})"
        )


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_structured_unit_square(n: int) -> Mesh:
    """
    Structured triangulation of (0,1)^2 with n x n cells.

    Each cell is split along its lower-left to upper-right diagonal.

    Args:
        n: Number of cells per side (>= 1)

    Returns:
        Mesh with (n+1)^2 vertices, 2n^2 triangles and h = sqrt(2)/n

    Raises:
        MeshError: If n < 1
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise MeshError(f"structured mesh needs n >= 1, got {n!r}")
    n = int(n)

    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    mesh = Mesh.from_triangles(vertices, triangles, name=f"unit_square_n{n}")
    logger.debug(f"Built {mesh!r}")
    return mesh


def refine_red(mesh: Mesh) -> Mesh:
    """
    Regular refinement: split every triangle into four via its edge midpoints.

    The children are congruent to the parent scaled by 1/2, so h halves and
    the shape-regularity constant is unchanged.
    """
    nv = mesh.n_vertices
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    v = mesh.triangles
    m = nv + mesh.triangle_edges
    children = np.stack(
        [
            np.column_stack([v[:, 0], m[:, 2], m[:, 1]]),
            np.column_stack([m[:, 2], v[:, 1], m[:, 0]]),
            np.column_stack([m[:, 1], m[:, 0], v[:, 2]]),
            np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
        ],
        axis=1,
    ).reshape(-1, 3)

    refined = Mesh.from_triangles(vertices, children, name=f"{mesh.name}_r")
    logger.debug(f"Refined {mesh!r} -> {refined!r}")
    return refined


def interior_vertices(mesh: Mesh) -> np.ndarray:
    """Index set I_h of vertices not on the boundary."""
    return mesh.interior_vertices
