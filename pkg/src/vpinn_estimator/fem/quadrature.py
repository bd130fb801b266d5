"""
Symmetric quadrature rules on triangles.

Reference triangle: vertices (0,0), (1,0), (0,1), area 1/2. Nodes are stored
as barycentric triples (l0, l1, l2); the reference point is (l1, l2).

Tabulated rules (all weights positive):
- precision 3 slot: 6-point symmetric rule, exact up to degree 4
- precision 7 slot: 16-point symmetric rule, exact up to degree 8
The classical 4-point degree-3 and 13-point degree-7 rules carry a negative
centroid weight and are not used.
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Callable, Dict

import numpy as np

from ..utils.numerics import ensure_finite
from .mesh import Mesh

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]

SUPPORTED_PRECISIONS = (3, 7)


class QuadratureError(Exception):
    """Exception raised for unsupported quadrature requests."""
    pass


@dataclass(frozen=True, eq=False)
class QuadRule:
    """
    Quadrature rule on the reference triangle.

    Attributes:
        precision: Guaranteed algebraic precision q
        barycentric: (m, 3) nodes in barycentric coordinates
        weights: (m,) positive weights summing to 1/2
        exact_degree: Highest degree the tabulated rule integrates exactly (>= precision)
    """

    precision: int
    barycentric: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def points(self) -> np.ndarray:
        """(m, 2) reference coordinates."""
        return self.barycentric[:, 1:]


@dataclass(frozen=True, eq=False)
class MappedRule:
    """
    A rule mapped onto physical elements.

    Attributes:
        elements: (k,) element ids
        points: (k, m, 2) physical node coordinates
        weights: (k, m) physical weights (reference weights x 2|E|); each row sums to |E|
    """

    elements: np.ndarray
    points: np.ndarray
    weights: np.ndarray


def _orbit_3(a: float) -> list:
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _orbit_6(a: float, b: float) -> list:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _assemble(orbits) -> tuple:
    nodes, weights = [], []
    for pts, w in orbits:
        nodes.extend(pts)
        weights.extend([w] * len(pts))
    # tabulated weights are normalized to total 1
    return np.array(nodes, dtype=float), 0.5 * np.array(weights, dtype=float)


def _rule_precision_3() -> QuadRule:
    bary, weights = _assemble([
        (_orbit_3(0.445948490915965), 0.223381589678011),
        (_orbit_3(0.091576213509771), 0.109951743655322),
    ])
    return QuadRule(precision=3, barycentric=bary, weights=weights, exact_degree=4)


def _rule_precision_7() -> QuadRule:
    bary, weights = _assemble([
        ([(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)], 0.144315607677787),
        (_orbit_3(0.459292588292723), 0.095091634267285),
        (_orbit_3(0.170569307751760), 0.103217370534718),
        (_orbit_3(0.050547228317031), 0.032458497623198),
        (_orbit_6(0.263112829634638, 0.008394777409958), 0.027230314174435),
    ])
    return QuadRule(precision=7, barycentric=bary, weights=weights, exact_degree=8)


_RULES: Dict[int, QuadRule] = {}


def reference_rule(precision: int) -> QuadRule:
    """
    Tabulated symmetric rule of the given algebraic precision.

    Args:
        precision: 3 (assembly) or 7 (verification/projection integrals)

    Raises:
        QuadratureError: If the precision is not tabulated
    """
    if precision not in SUPPORTED_PRECISIONS:
        raise QuadratureError(
            f"unsupported quadrature precision {precision!r}; expected one of {SUPPORTED_PRECISIONS}"
        )
    if precision not in _RULES:
        rule = _rule_precision_3() if precision == 3 else _rule_precision_7()
        rule.barycentric.setflags(write=False)
        rule.weights.setflags(write=False)
        _RULES[precision] = rule
    return _RULES[precision]


def map_rule(mesh: Mesh, rule: QuadRule, elements=None) -> MappedRule:
    """Map reference nodes and weights onto the given elements (all by default)."""
    elems = np.arange(mesh.n_triangles) if elements is None else np.atleast_1d(elements)
    corners = mesh.vertices[mesh.triangles[elems]]              # (k, 3, 2)
    points = np.einsum("mi,kid->kmd", rule.barycentric, corners)
    weights = 2.0 * mesh.areas[elems][:, None] * rule.weights[None, :]
    return MappedRule(elements=elems, points=points, weights=weights)


def integrate(mesh: Mesh, element: int, func: PointFunction, rule: QuadRule) -> float:
    """
    Sum of func(xi) * omega over the mapped nodes of one element.

    Args:
        mesh: Triangulation
        element: Element index
        func: Vectorized point function, (m, 2) -> (m,)
        rule: Reference rule

    Raises:
        NumericDomainError: If func returns non-finite values
    """
    mapped = map_rule(mesh, rule, element)
    values = ensure_finite(func(mapped.points[0]), f"integrand on element {element}")
    return float(np.sum(values * mapped.weights[0]))


def discrete_seminorm(mesh: Mesh, element: int, func: PointFunction, rule: QuadRule) -> float:
    """Quadrature-based seminorm (sum of func^2(xi) omega)^(1/2) on one element."""
    return float(np.sqrt(integrate(mesh, element, lambda x: func(x) ** 2, rule)))


def element_integrals(mesh: Mesh, func: PointFunction, rule: QuadRule) -> np.ndarray:
    """Per-element integrals of func for every element, shape (nt,)."""
    mapped = map_rule(mesh, rule)
    values = ensure_finite(func(mapped.points), "integrand")
    return np.sum(values * mapped.weights, axis=1)


def monomial_integral(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def gauss_legendre_unit(n_points: int) -> tuple:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (nodes + 1.0), 0.5 * weights
