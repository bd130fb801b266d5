"""Tests for the tanh network and the trial field."""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator.fem.mesh import build_structured_unit_square
from vpinn_estimator.fem.quadrature import reference_rule
from vpinn_estimator.fem.testspace import assemble_residuals, loss
from vpinn_estimator.nn.network import (
    MLPParams,
    NetworkError,
    TrialField,
    eval_with_gradient,
    init_params,
    loss_gradient,
    unit_multiplier,
)
from vpinn_estimator.problems import poisson_tanh, polynomial_diffusion, zero_field


class TestInitParams:
    """Tests for init_params and MLPParams."""

    def test_default_architecture_count(self):
        """2 -> 50 -> 50 -> 50 -> 1 has 5301 parameters."""
        params = init_params([2, 50, 50, 50, 1], seed=0)
        assert params.n_params == 5301
        assert len(params.flatten()) == 5301

    def test_single_layer(self):
        assert init_params([2, 1], seed=0).n_params == 3

    def test_deterministic(self):
        a = init_params([2, 10, 1], seed=7).flatten()
        b = init_params([2, 10, 1], seed=7).flatten()
        c = init_params([2, 10, 1], seed=8).flatten()
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_distribution(self):
        """Weights within 1/sqrt(fan_in), zero biases."""
        params = init_params([2, 40, 30, 1], seed=1)
        for W, b in zip(params.weights, params.biases):
            assert np.all(np.abs(W) <= 1.0 / np.sqrt(W.shape[1]))
            assert np.all(b == 0.0)

    @pytest.mark.parametrize("widths", [[], [2], [3, 1], [2, 5, 2], [2, 0, 1]])
    def test_bad_widths(self, widths):
        with pytest.raises(NetworkError):
            init_params(widths, seed=0)

    def test_flat_layout(self):
        """Per layer: W row-major, then b."""
        params = init_params([2, 3, 1], seed=2)
        flat = params.flatten()
        assert np.array_equal(flat[:6], params.weights[0].ravel())
        assert np.array_equal(flat[6:9], params.biases[0])
        assert np.array_equal(flat[9:12], params.weights[1].ravel())
        assert np.array_equal(params.with_flat(flat).flatten(), flat)

    def test_with_flat_wrong_length(self):
        params = init_params([2, 3, 1], seed=2)
        with pytest.raises(NetworkError):
            params.with_flat(np.zeros(5))

    def test_shape_mismatch(self):
        with pytest.raises(NetworkError):
            MLPParams((2, 1), [np.zeros((2, 1))], [np.zeros(1)])


class TestEvalWithGradient:
    """Tests for value and spatial gradient propagation."""

    def test_zero_weights(self):
        """Zero parameters and zero lift give the zero function."""
        params = init_params([2, 5, 5, 1], seed=0)
        params = params.with_flat(np.zeros(params.n_params))
        field = TrialField(params, zero_field())
        for x in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)]:
            value, grad = eval_with_gradient(field, x)
            assert value == 0.0
            assert np.array_equal(grad, [0.0, 0.0])

    def test_linear_network(self):
        """w = x + y with Phi = 1 has gradient (1, 1)."""
        params = MLPParams((2, 1), [np.array([[1.0, 1.0]])], [np.zeros(1)])
        field = TrialField(params, zero_field(), unit_multiplier())
        value, grad = eval_with_gradient(field, (0.3, 0.4))
        assert value == pytest.approx(0.7)
        assert np.allclose(grad, [1.0, 1.0])

    def test_finite_differences(self):
        """Central differences with step 1e-6 match at 50 random points."""
        field = TrialField.for_problem(init_params([2, 20, 20, 1], seed=4), poisson_tanh())
        rng = np.random.default_rng(11)
        step = 1e-6
        for x in rng.random((50, 2)):
            _, grad = eval_with_gradient(field, x)
            fd = np.array([
                (eval_with_gradient(field, x + step * e)[0] - eval_with_gradient(field, x - step * e)[0])
                / (2 * step)
                for e in np.eye(2)
            ])
            scale = max(np.max(np.abs(grad)), 1e-2)
            assert np.max(np.abs(fd - grad)) / scale <= 1e-6

    def test_boundary_values(self):
        """u^NN equals g on the boundary whatever the weights."""
        spec = poisson_tanh()
        field = TrialField.for_problem(init_params([2, 10, 1], seed=9), spec)
        t = np.linspace(0.0, 1.0, 17)
        boundary = np.concatenate([
            np.column_stack([t, np.zeros_like(t)]),
            np.column_stack([t, np.ones_like(t)]),
            np.column_stack([np.zeros_like(t), t]),
            np.column_stack([np.ones_like(t), t]),
        ])
        value, _ = field.evaluate(boundary)
        assert np.max(np.abs(value - spec.g(boundary))) <= 1e-12

    def test_batched_shapes(self):
        field = TrialField.for_problem(init_params([2, 4, 1], seed=0), poisson_tanh())
        value, grad = field.evaluate(np.random.default_rng(0).random((3, 5, 2)))
        assert value.shape == (3, 5)
        assert grad.shape == (3, 5, 2)


class TestLossGradient:
    """Tests for loss_gradient."""

    @pytest.fixture
    def mesh(self):
        return build_structured_unit_square(4)

    @pytest.fixture
    def rule(self):
        return reference_rule(3)

    def test_loss_matches_assembly(self, mesh, rule):
        """Same R_h^2 as the plain assembly path, to the last bit."""
        spec = poisson_tanh()
        field = TrialField.for_problem(init_params([2, 10, 10, 1], seed=1), spec)
        value, _ = loss_gradient(field, mesh, spec, rule)
        assert value == loss(assemble_residuals(mesh, field, spec, rule))

    def test_finite_differences(self, mesh, rule):
        """20 random components match central differences with step 1e-4."""
        spec = poisson_tanh()
        params = init_params([2, 10, 10, 1], seed=2)
        field = TrialField.for_problem(params, spec)
        _, grad = loss_gradient(field, mesh, spec, rule)
        theta = params.flatten()
        scale = 1e-2 * np.max(np.abs(grad))

        rng = np.random.default_rng(5)
        for i in rng.choice(len(theta), size=20, replace=False):
            values = []
            for sign in (1.0, -1.0):
                bumped = theta.copy()
                bumped[i] += sign * 1e-4
                moved = field.with_params(params.with_flat(bumped))
                values.append(loss(assemble_residuals(mesh, moved, spec, rule)))
            fd = (values[0] - values[1]) / 2e-4
            assert abs(fd - grad[i]) / max(abs(grad[i]), scale) <= 1e-4

    def test_zero_at_exact_minimizer(self, mesh, rule):
        """With the exact solution as lift and a zero output layer every r_i vanishes."""
        spec = polynomial_diffusion()
        params = init_params([2, 6, 1], seed=3)
        params.weights[-1][:] = 0.0
        params.biases[-1][:] = 0.0
        field = TrialField.for_problem(params, spec)
        value, grad = loss_gradient(field, mesh, spec, rule)
        assert value <= 1e-26
        assert np.max(np.abs(grad)) <= 1e-10

    def test_gradient_order(self, mesh, rule):
        spec = poisson_tanh()
        params = init_params([2, 3, 1], seed=0)
        _, grad = loss_gradient(TrialField.for_problem(params, spec), mesh, spec, rule)
        assert grad.shape == (params.n_params,)
        assert np.all(np.isfinite(grad))
