"""
Monomial basis on the reference triangle.

Degree-k polynomials are stored as coefficient vectors over xi^a eta^b,
a + b <= k, ordered by total degree. P_j is a prefix of P_k for j <= k, so
lower-degree coefficients embed by zero padding.
"""

from functools import lru_cache
from typing import List, Tuple

import numpy as np

from ..fem.quadrature import monomial_integral

MAX_DEGREE = 3


def dimension(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def exponents(degree: int) -> Tuple[Tuple[int, int], ...]:
    """(a, b) pairs of the basis, total degree ascending."""
    return tuple((d - b, b) for d in range(degree + 1) for b in range(d + 1))


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def monomials(ref_points: np.ndarray, degree: int) -> np.ndarray:
    """Basis values at (..., 2) reference points, shape (..., dim)."""
    xi = ref_points[..., 0, None]
    eta = ref_points[..., 1, None]
    a, b = np.array(exponents(degree)).T
    return xi ** a * eta ** b


@lru_cache(maxsize=None)
def principal_lattice(degree: int) -> np.ndarray:
    """Nodes (i/k, j/k), i + j <= k; the centroid for k = 0."""
    if degree == 0:
        return _readonly(np.array([[1.0 / 3.0, 1.0 / 3.0]]))
    nodes: List[Tuple[float, float]] = [
        (i / degree, j / degree) for j in range(degree + 1) for i in range(degree + 1 - j)
    ]
    return _readonly(np.array(nodes))


@lru_cache(maxsize=None)
def inverse_vandermonde(degree: int) -> np.ndarray:
    """Maps values at the principal lattice to interpolant coefficients."""
    return _readonly(np.linalg.inv(monomials(principal_lattice(degree), degree)))


@lru_cache(maxsize=None)
def derivative_matrices(degree: int) -> np.ndarray:
    """
    (2, dim, dim) matrices taking coefficients of p to those of dp/dxi, dp/deta.

    The result stays in the degree-k basis; its top-degree entries are zero.
    """
    exps = exponents(degree)
    index = {e: i for i, e in enumerate(exps)}
    n = len(exps)
    mats = np.zeros((2, n, n))
    for col, (a, b) in enumerate(exps):
        if a > 0:
            mats[0, index[(a - 1, b)], col] = a
        if b > 0:
            mats[1, index[(a, b - 1)], col] = b
    return _readonly(mats)


@lru_cache(maxsize=None)
def reference_gram(degree: int) -> np.ndarray:
    """Exact L2 Gram matrix of the basis on the reference triangle."""
    exps = exponents(degree)
    gram = np.array(
        [[monomial_integral(a1 + a2, b1 + b2) for (a2, b2) in exps] for (a1, b1) in exps]
    )
    return _readonly(gram)


def embed(coefficients: np.ndarray, degree: int, axis: int = -1) -> np.ndarray:
    """Zero-pad coefficients along ``axis`` up to the degree-k basis."""
    target = dimension(degree)
    current = coefficients.shape[axis]
    if current > target:
        raise ValueError(f"cannot embed {current} coefficients into degree {degree}")
    pad = [(0, 0)] * coefficients.ndim
    pad[axis] = (0, target - current)
    return np.pad(coefficients, pad)
