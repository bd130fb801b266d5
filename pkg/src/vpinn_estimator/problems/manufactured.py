"""
Manufactured problems on the unit square.

Each ProblemSpec carries the operator coefficients, forcing, Dirichlet data,
a smooth lift of the data and (optionally) the exact solution with its
gradient, all as vectorized closed-form evaluators on (..., 2) arrays.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], np.ndarray]
VectorFn = Callable[[np.ndarray], np.ndarray]

LIFT_MODES = ("exact", "transfinite")


class ProblemError(Exception):
    """Exception raised for unknown or inconsistent problem definitions."""
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """
    Data of -div(mu grad u) + beta . grad u + sigma u = f in (0,1)^2, u = g on the boundary.

    Attributes:
        name: Registry name
        mu, sigma, f, g: scalar fields
        beta: vector field (..., 2)
        lift, lift_grad: smooth extension of g and its gradient
        exact, exact_grad: exact solution and gradient (None if unknown)
        coercive: Whether the data claim sigma - div(beta)/2 >= 0
    """

    name: str
    mu: ScalarFn
    beta: VectorFn
    sigma: ScalarFn
    f: ScalarFn
    g: ScalarFn
    lift: ScalarFn
    lift_grad: VectorFn
    exact: Optional[ScalarFn] = None
    exact_grad: Optional[VectorFn] = None
    coercive: bool = True
    lift_mode: str = "exact"

    @property
    def has_exact(self) -> bool:
        return self.exact is not None and self.exact_grad is not None

    def with_lift(self, mode: str) -> "ProblemSpec":
        """
        Return a copy using the requested lift of the boundary data.

        Args:
            mode: "exact" (lift = exact solution) or "transfinite" (Coons patch of g)

        Raises:
            ProblemError: Unknown mode, or the mode needs an exact gradient that is missing
        """
        if mode not in LIFT_MODES:
            raise ProblemError(f"unknown lift mode {mode!r}; expected one of {LIFT_MODES}")
        if mode == self.lift_mode:
            return self
        if not self.has_exact:
            raise ProblemError(f"problem {self.name!r} has no exact solution to build a lift from")
        if mode == "exact":
            return replace(self, lift=self.exact, lift_grad=self.exact_grad, lift_mode=mode)
        lift, lift_grad = transfinite_lift(self.exact, self.exact_grad)
        return replace(self, lift=lift, lift_grad=lift_grad, lift_mode=mode)


def _ones(x: np.ndarray) -> np.ndarray:
    return np.ones(x.shape[:-1])


def _zeros(x: np.ndarray) -> np.ndarray:
    return np.zeros(x.shape[:-1])


def _zero_vector(x: np.ndarray) -> np.ndarray:
    return np.zeros(x.shape)


# ============================================================================
# Problems
# ============================================================================

def poisson_tanh() -> ProblemSpec:
    """-Lap u = f with u = tanh(2(x^3 - y^4)); f from the closed-form Laplacian."""

    def s(x):
        return 2.0 * (x[..., 0] ** 3 - x[..., 1] ** 4)

    def grad_s(x):
        return np.stack([6.0 * x[..., 0] ** 2, -8.0 * x[..., 1] ** 3], axis=-1)

    def exact(x):
        return np.tanh(s(x))

    def exact_grad(x):
        sech2 = 1.0 - np.tanh(s(x)) ** 2
        return sech2[..., None] * grad_s(x)

    def forcing(x):
        t = np.tanh(s(x))
        sech2 = 1.0 - t ** 2
        gs = grad_s(x)
        lap_s = 12.0 * x[..., 0] - 24.0 * x[..., 1] ** 2
        lap_u = sech2 * lap_s - 2.0 * sech2 * t * np.sum(gs * gs, axis=-1)
        return -lap_u

    return ProblemSpec(
        name="poisson_tanh",
        mu=_ones,
        beta=_zero_vector,
        sigma=_zeros,
        f=forcing,
        g=exact,
        lift=exact,
        lift_grad=exact_grad,
        exact=exact,
        exact_grad=exact_grad,
    )


def polynomial_diffusion() -> ProblemSpec:
    """-Lap u = -4 with u = x^2 + y^2; every integrand is polynomial."""

    def exact(x):
        return x[..., 0] ** 2 + x[..., 1] ** 2

    def exact_grad(x):
        return 2.0 * x

    return ProblemSpec(
        name="polynomial_diffusion",
        mu=_ones,
        beta=_zero_vector,
        sigma=_zeros,
        f=lambda x: np.full(x.shape[:-1], -4.0),
        g=exact,
        lift=exact,
        lift_grad=exact_grad,
        exact=exact,
        exact_grad=exact_grad,
    )


def advection_reaction() -> ProblemSpec:
    """
    Full operator with variable coefficients and homogeneous Dirichlet data.

    mu = 1 + xy/2, beta = (1, 1/2), sigma = 1 + x^2, u = sin(pi x) sin(pi y).
    """
    pi = np.pi

    def mu(x):
        return 1.0 + 0.5 * x[..., 0] * x[..., 1]

    def beta(x):
        return np.stack([np.ones(x.shape[:-1]), np.full(x.shape[:-1], 0.5)], axis=-1)

    def sigma(x):
        return 1.0 + x[..., 0] ** 2

    def exact(x):
        return np.sin(pi * x[..., 0]) * np.sin(pi * x[..., 1])

    def exact_grad(x):
        sx, sy = np.sin(pi * x[..., 0]), np.sin(pi * x[..., 1])
        cx, cy = np.cos(pi * x[..., 0]), np.cos(pi * x[..., 1])
        return pi * np.stack([cx * sy, sx * cy], axis=-1)

    def forcing(x):
        grad_u = exact_grad(x)
        grad_mu = 0.5 * x[..., ::-1]
        lap_u = -2.0 * pi ** 2 * exact(x)
        div_flux = np.sum(grad_mu * grad_u, axis=-1) + mu(x) * lap_u
        return -div_flux + np.sum(beta(x) * grad_u, axis=-1) + sigma(x) * exact(x)

    return ProblemSpec(
        name="advection_reaction",
        mu=mu,
        beta=beta,
        sigma=sigma,
        f=forcing,
        g=exact,
        lift=exact,
        lift_grad=exact_grad,
        exact=exact,
        exact_grad=exact_grad,
    )


PROBLEMS: Dict[str, Callable[[], ProblemSpec]] = {
    "poisson_tanh": poisson_tanh,
    "polynomial_diffusion": polynomial_diffusion,
    "advection_reaction": advection_reaction,
}


def get_problem(name: str, lift: str = "exact") -> ProblemSpec:
    """
    Look up a registered problem.

    Raises:
        ProblemError: If the name is not registered
    """
    try:
        spec = PROBLEMS[name]()
    except KeyError:
        raise ProblemError(f"unknown problem {name!r}; available: {sorted(PROBLEMS)}")
    return spec.with_lift(lift)


# ============================================================================
# Lifts
# ============================================================================

def transfinite_lift(g: ScalarFn, g_grad: VectorFn):
    """
    Coons-patch extension of boundary data on the unit square.

    Uses only g and its tangential derivatives on the four sides; matches g on
    the whole boundary.

    Returns:
        (lift, lift_grad) evaluators
    """
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    def _sides(x):
        X, Y = x[..., 0], x[..., 1]
        zero, one = np.zeros_like(X), np.ones_like(X)
        left = np.stack([zero, Y], axis=-1)
        right = np.stack([one, Y], axis=-1)
        bottom = np.stack([X, zero], axis=-1)
        top = np.stack([X, one], axis=-1)
        return X, Y, left, right, bottom, top

    def lift(x):
        X, Y, left, right, bottom, top = _sides(x)
        g00, g10, g01, g11 = g(corners)
        edges = (1 - X) * g(left) + X * g(right) + (1 - Y) * g(bottom) + Y * g(top)
        bilinear = (1 - X) * (1 - Y) * g00 + X * (1 - Y) * g10 + (1 - X) * Y * g01 + X * Y * g11
        return edges - bilinear

    def lift_grad(x):
        X, Y, left, right, bottom, top = _sides(x)
        g00, g10, g01, g11 = g(corners)
        dx = (
            g(right) - g(left)
            + (1 - Y) * g_grad(bottom)[..., 0] + Y * g_grad(top)[..., 0]
            - ((1 - Y) * (g10 - g00) + Y * (g11 - g01))
        )
        dy = (
            (1 - X) * g_grad(left)[..., 1] + X * g_grad(right)[..., 1]
            + g(top) - g(bottom)
            - ((1 - X) * (g01 - g00) + X * (g11 - g10))
        )
        return np.stack([dx, dy], axis=-1)

    return lift, lift_grad


# ============================================================================
# Checks
# ============================================================================

def _sample_points(n_points: int, seed: int, margin: float = 0.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return margin + (1.0 - 2.0 * margin) * rng.random((n_points, 2))


def _divergence_fd(vector_fn: VectorFn, x: np.ndarray, step: float) -> np.ndarray:
    div = np.zeros(x.shape[:-1])
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        div += (vector_fn(x + e)[..., k] - vector_fn(x - e)[..., k]) / (2.0 * step)
    return div


def check_consistency(
    spec: ProblemSpec,
    n_points: int = 100,
    seed: int = 0,
    tol: float = 1e-6,
    step: float = 1e-5,
) -> float:
    """
    Strong-form residual of the exact solution at random points.

    The diffusive flux mu grad u is differentiated by central differences, so
    the check is independent of the closed-form forcing.

    Returns:
        Largest |-div(mu grad u) + beta . grad u + sigma u - f|

    Raises:
        ProblemError: If no exact solution is present or the residual exceeds tol
    """
    if not spec.has_exact:
        raise ProblemError(f"problem {spec.name!r} has no exact solution")

    x = _sample_points(n_points, seed, margin=2 * step)

    def flux(p):
        return spec.mu(p)[..., None] * spec.exact_grad(p)

    residual = (
        -_divergence_fd(flux, x, step)
        + np.sum(spec.beta(x) * spec.exact_grad(x), axis=-1)
        + spec.sigma(x) * spec.exact(x)
        - spec.f(x)
    )
    worst = float(np.max(np.abs(residual)))
    logger.debug(f"Consistency residual for {spec.name}: {worst:.3e}")
    if worst > tol:
        raise ProblemError(f"manufactured data of {spec.name!r} inconsistent: residual {worst:.3e}")
    return worst


def check_coercivity(
    spec: ProblemSpec,
    n_points: int = 100,
    seed: int = 0,
    step: float = 1e-6,
) -> float:
    """
    Check mu >= mu0 > 0 and sigma - div(beta)/2 >= 0 at random points.

    Returns:
        The sampled lower bound mu0

    Raises:
        ProblemError: If either condition fails
    """
    x = _sample_points(n_points, seed, margin=2 * step)
    mu0 = float(np.min(spec.mu(x)))
    if mu0 <= 0.0:
        raise ProblemError(f"{spec.name!r}: diffusivity not positive (min {mu0:.3e})")
    if spec.coercive:
        reaction = spec.sigma(x) - 0.5 * _divergence_fd(spec.beta, x, step)
        if np.min(reaction) < -1e-8:
            raise ProblemError(
                f"{spec.name!r}: sigma - div(beta)/2 negative (min {np.min(reaction):.3e})"
            )
    return mu0
