"""Meshes, quadrature and the P1 test space."""

from .mesh import Mesh, MeshError, build_structured_unit_square, interior_vertices, refine_red
from .quadrature import (
    SUPPORTED_PRECISIONS,
    MappedRule,
    QuadratureError,
    QuadRule,
    discrete_seminorm,
    element_integrals,
    integrate,
    map_rule,
    reference_rule,
)
from .testspace import (
    ResidualAssembler,
    ResidualVector,
    assemble_residuals,
    elemental_index_set,
    hat_gradient,
    loss,
    measure_norm_constants,
    norm_constants,
)

__all__ = [
    "Mesh",
    "MeshError",
    "build_structured_unit_square",
    "interior_vertices",
    "refine_red",
    "SUPPORTED_PRECISIONS",
    "MappedRule",
    "QuadratureError",
    "QuadRule",
    "discrete_seminorm",
    "element_integrals",
    "integrate",
    "map_rule",
    "reference_rule",
    "ResidualAssembler",
    "ResidualVector",
    "assemble_residuals",
    "elemental_index_set",
    "hat_gradient",
    "loss",
    "measure_norm_constants",
    "norm_constants",
]
