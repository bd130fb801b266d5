"""
Fast property checks of the numerical building blocks.

Each check raises SelfTestError with a message on failure; ``run_selftest``
times every check and collects CheckResult records.
"""

import logging
import time
from typing import Callable, List, Tuple

import numpy as np

from ..estimator.breakdown import assemble_breakdown
from ..estimator.projection import project
from ..fem.mesh import Mesh, build_structured_unit_square
from ..fem.quadrature import monomial_integral, map_rule, reference_rule
from ..fem.testspace import assemble_residuals, hat_gradient, measure_norm_constants
from ..models import CheckResult
from ..nn.network import TrialField, eval_with_gradient, init_params, loss_gradient
from ..problems.fields import AnalyticField, Field
from ..problems.manufactured import PROBLEMS, ProblemSpec, check_consistency, poisson_tanh, polynomial_diffusion

logger = logging.getLogger(__name__)


class SelfTestError(ValueError):
    """A numerical check produced a value outside its tolerance."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SelfTestError(message)


def direct_residuals(mesh: Mesh, field: Field, data: ProblemSpec, rule) -> np.ndarray:
    """
    r_i recomputed test function by test function.

    Hat values come from solving for barycentric coordinates at each node, so
    this path shares no assembly code with ResidualAssembler.
    """
    out = np.zeros(len(mesh.interior_vertices))
    for pos, vertex in enumerate(mesh.interior_vertices):
        for element in np.flatnonzero(np.any(mesh.triangles == vertex, axis=1)):
            corners = mesh.vertices[mesh.triangles[element]]
            local = mesh.local_vertex(vertex, element)
            mapped = map_rule(mesh, rule, element)
            points, weights = mapped.points[0], mapped.weights[0]
            system = np.vstack([corners.T, np.ones(3)])
            bary = np.linalg.solve(system, np.vstack([points.T, np.ones(len(points))]))
            phi = bary[local]
            grad_phi = hat_gradient(mesh, vertex, element)
            u, grad_u = field.evaluate(points)
            integrand = (
                data.f(points) * phi
                - data.mu(points) * (grad_u @ grad_phi)
                - np.sum(data.beta(points) * grad_u, axis=-1) * phi
                - data.sigma(points) * u * phi
            )
            out[pos] += float(np.sum(weights * integrand))
    return out


def check_quadrature() -> str:
    worst = 0.0
    for precision in (3, 7):
        rule = reference_rule(precision)
        _require(bool(np.all(rule.weights > 0)), f"precision {precision}: non-positive weight")
        for a in range(precision + 1):
            for b in range(precision + 1 - a):
                approx = np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                exact = monomial_integral(a, b)
                worst = max(worst, abs(approx - exact) / exact)
    _require(worst <= 1e-13, f"monomial relative error {worst:.2e}")
    return f"max relative error {worst:.1e}"


def check_projection(n_samples: int = 100, seed: int = 0) -> str:
    """Reproduction is measured relative to max(1, max |p|) at the order-7 points."""
    rng = np.random.default_rng(seed)
    rule7 = reference_rule(7)
    worst_repro = worst_mean = 0.0
    for _ in range(n_samples):
        corners = (
            rng.uniform(-0.5, 0.5, size=2)
            + np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]])
            + 0.15 * rng.random((3, 2))
        )
        mesh = Mesh.from_triangles(corners, [[0, 1, 2]])
        degree = int(rng.integers(2, 4))
        coeffs = rng.normal(size=(degree + 1, degree + 1))

        def poly(x, c=coeffs, k=degree):
            return sum(
                c[a, b] * x[..., 0] ** a * x[..., 1] ** b
                for a in range(k + 1) for b in range(k + 1 - a)
            )

        points = map_rule(mesh, rule7).points[0]
        target = poly(points)
        reproduced = project(mesh, 0, degree, poly).evaluate(points)
        scale = max(1.0, float(np.max(np.abs(target))))
        worst_repro = max(worst_repro, float(np.max(np.abs(reproduced - target))) / scale)

        freq = rng.uniform(0.5, 3.0, size=2)

        def smooth(x, w=freq):
            return np.sin(w[0] * x[..., 0]) * np.exp(w[1] * x[..., 1])

        projected = project(mesh, 0, degree, smooth)
        mapped = map_rule(mesh, rule7)
        lhs = np.sum(mapped.weights[0] * projected.evaluate(mapped.points[0]))
        rhs = np.sum(mapped.weights[0] * smooth(mapped.points[0]))
        worst_mean = max(worst_mean, abs(lhs - rhs))
    _require(worst_repro <= 1e-12, f"reproduction error {worst_repro:.2e}")
    _require(worst_mean <= 1e-12, f"mean defect {worst_mean:.2e}")
    return f"reproduction {worst_repro:.1e}, mean defect {worst_mean:.1e}"


def check_zero_estimator() -> str:
    spec = polynomial_diffusion()
    mesh = build_structured_unit_square(8)
    field = AnalyticField(spec.exact, spec.exact_grad)
    r = assemble_residuals(mesh, field, spec, reference_rule(3))
    breakdown = assemble_breakdown(mesh, field, spec, r, measure_norm_constants(mesh))
    worst_r = float(np.max(np.abs(r.values)))
    _require(worst_r <= 1e-9, f"residual {worst_r:.2e}")
    _require(breakdown.eta <= 1e-8, f"eta {breakdown.eta:.2e}")
    return f"max |r_i| {worst_r:.1e}, eta {breakdown.eta:.1e}"


def check_gradients(seed: int = 0) -> str:
    rng = np.random.default_rng(seed)
    spec = poisson_tanh()
    mesh = build_structured_unit_square(4)
    rule = reference_rule(3)
    params = init_params([2, 10, 10, 1], seed)
    field = TrialField.for_problem(params, spec)

    step = 1e-6
    worst_x = 0.0
    for x in rng.random((50, 2)):
        _, grad = eval_with_gradient(field, x)
        fd = np.array([
            (eval_with_gradient(field, x + step * e)[0] - eval_with_gradient(field, x - step * e)[0])
            / (2 * step)
            for e in np.eye(2)
        ])
        worst_x = max(worst_x, float(np.max(np.abs(fd - grad)) / max(np.max(np.abs(grad)), 1e-2)))

    _, grad_theta = loss_gradient(field, mesh, spec, rule)
    theta = params.flatten()
    scale = 1e-2 * float(np.max(np.abs(grad_theta)))
    worst_p = 0.0
    for i in rng.choice(len(theta), size=20, replace=False):
        bumped = []
        for sign in (1.0, -1.0):
            t = theta.copy()
            t[i] += sign * 1e-4
            r = assemble_residuals(mesh, field.with_params(params.with_flat(t)), spec, rule)
            bumped.append(r.loss())
        fd = (bumped[0] - bumped[1]) / 2e-4
        worst_p = max(worst_p, abs(fd - grad_theta[i]) / max(abs(grad_theta[i]), scale))
    _require(worst_x <= 1e-6, f"spatial gradient mismatch {worst_x:.2e}")
    _require(worst_p <= 1e-4, f"parameter gradient mismatch {worst_p:.2e}")
    return f"spatial {worst_x:.1e}, parameters {worst_p:.1e}"


def check_residual_paths(seed: int = 0) -> str:
    spec = poisson_tanh()
    mesh = build_structured_unit_square(4)
    rule = reference_rule(3)
    field = TrialField.for_problem(init_params([2, 8, 1], seed), spec)
    fast = assemble_residuals(mesh, field, spec, rule).values
    slow = direct_residuals(mesh, field, spec, rule)
    worst = float(np.max(np.abs(fast - slow)))
    _require(worst <= 1e-12, f"paths differ by {worst:.2e}")
    return f"max difference {worst:.1e}"


def check_norm_constants() -> str:
    """C_h grows like 1/h: each halving of h should roughly double it."""
    c = [measure_norm_constants(build_structured_unit_square(n)).C_h for n in (4, 8, 16)]
    ratios = [c[1] / c[0], c[2] / c[1]]
    _require(all(1.6 <= q <= 2.4 for q in ratios), f"C_h ratios {ratios}")
    return f"C_h ratios {ratios[0]:.3f}, {ratios[1]:.3f}"


def check_problems() -> str:
    worst = max(check_consistency(factory()) for factory in PROBLEMS.values())
    return f"max strong residual {worst:.1e}"


CHECKS: List[Tuple[str, Callable[[], str]]] = [
    ("quadrature_exactness", check_quadrature),
    ("projection_contract", check_projection),
    ("zero_estimator", check_zero_estimator),
    ("gradients", check_gradients),
    ("residual_paths", check_residual_paths),
    ("norm_constants", check_norm_constants),
    ("manufactured_data", check_problems),
]


def run_selftest() -> List[CheckResult]:
    """Run every check, logging one line each."""
    results = []
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            detail, passed = check(), True
        except SelfTestError as e:
            detail, passed = str(e), False
        except Exception as e:
            detail, passed = f"{type(e).__name__}: {e}", False
        result = CheckResult(
            name=name, passed=passed, detail=detail, seconds=time.perf_counter() - start
        )
        results.append(result)
        log = logger.info if passed else logger.error
        log(f"{'PASS' if passed else 'FAIL'} {name} ({result.seconds:.2f}s): {detail}")
    return results
