"""Tests for residual assembly and norm constants on the P1 test space."""

import pytest
import numpy as np
from dataclasses import replace
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator.fem import testspace
from vpinn_estimator.fem.mesh import Mesh, MeshError, build_structured_unit_square, refine_red
from vpinn_estimator.fem.quadrature import QuadRule, reference_rule
from vpinn_estimator.fem.testspace import (
    ResidualAssembler,
    ResidualVector,
    assemble_residuals,
    asymptotic_norm_constants,
    elemental_index_set,
    hat_gradient,
    loss,
    measure_norm_constants,
    norm_constants,
    stiffness_matrix,
)
from vpinn_estimator.harness.selftest import direct_residuals
from vpinn_estimator.nn.network import TrialField, init_params
from vpinn_estimator.problems import AnalyticField, advection_reaction, poisson_tanh, polynomial_diffusion, zero_field


def _zero(x):
    return np.zeros(x.shape[:-1])


class TestHatGradient:
    """Tests for hat_gradient."""

    @pytest.fixture
    def reference_mesh(self):
        return Mesh.from_triangles([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])

    def test_reference_triangle(self, reference_mesh):
        """The hat at (1,0) is x."""
        assert np.allclose(hat_gradient(reference_mesh, 1, 0), [1.0, 0.0])
        assert np.allclose(hat_gradient(reference_mesh, 2, 0), [0.0, 1.0])
        assert np.allclose(hat_gradient(reference_mesh, 0, 0), [-1.0, -1.0])

    def test_partition_of_unity(self):
        mesh = build_structured_unit_square(3)
        for element in range(mesh.n_triangles):
            total = sum(hat_gradient(mesh, v, element) for v in mesh.triangles[element])
            assert np.allclose(total, 0.0, atol=1e-12)

    def test_scales_under_refinement(self):
        """Gradients double when h halves."""
        mesh = build_structured_unit_square(2)
        refined = refine_red(mesh)
        coarse = np.linalg.norm(mesh.hat_gradients, axis=-1).max()
        fine = np.linalg.norm(refined.hat_gradients, axis=-1).max()
        assert fine == pytest.approx(2.0 * coarse)

    def test_vertex_not_in_element(self):
        mesh = build_structured_unit_square(2)
        with pytest.raises(MeshError):
            hat_gradient(mesh, 8, 0)


class TestAssembleResiduals:
    """Tests for assemble_residuals."""

    @pytest.fixture
    def rule(self):
        return reference_rule(3)

    @pytest.fixture
    def random_field(self):
        spec = poisson_tanh()
        return TrialField.for_problem(init_params([2, 8, 8, 1], seed=3), spec)

    def test_exact_polynomial_solution(self, rule):
        """u = x^2 + y^2 makes every residual vanish."""
        spec = polynomial_diffusion()
        mesh = build_structured_unit_square(6)
        exact = AnalyticField(spec.exact, spec.exact_grad)
        r = assemble_residuals(mesh, exact, spec, rule)
        assert len(r) == 25
        assert np.max(np.abs(r.values)) <= 1e-12

    def test_zero_data_zero_field(self, rule):
        spec = replace(polynomial_diffusion(), f=_zero)
        r = assemble_residuals(build_structured_unit_square(4), zero_field(), spec, rule)
        assert np.all(r.values == 0.0)

    def test_matches_direct_summation(self, rule, random_field):
        """Element loop and per-test-function summation agree."""
        mesh = build_structured_unit_square(4)
        spec = poisson_tanh()
        fast = assemble_residuals(mesh, random_field, spec, rule).values
        slow = direct_residuals(mesh, random_field, spec, rule)
        assert np.max(np.abs(fast - slow)) <= 1e-12

    def test_matches_direct_summation_full_operator(self, rule):
        """Same oracle with variable mu, beta and sigma."""
        spec = advection_reaction()
        mesh = build_structured_unit_square(4)
        field = TrialField.for_problem(init_params([2, 6, 1], seed=5), spec)
        fast = assemble_residuals(mesh, field, spec, rule).values
        slow = direct_residuals(mesh, field, spec, rule)
        assert np.max(np.abs(fast - slow)) <= 1e-12

    def test_linear_in_forcing(self, rule, random_field):
        """r(2f) - r(f) is the load part of f alone."""
        spec = poisson_tanh()
        doubled = replace(spec, f=lambda x: 2.0 * spec.f(x))
        mesh = build_structured_unit_square(4)
        r1 = assemble_residuals(mesh, random_field, spec, rule).values
        r2 = assemble_residuals(mesh, random_field, doubled, rule).values
        load = assemble_residuals(mesh, zero_field(), spec, rule).values
        assert np.allclose(r2 - r1, load, atol=1e-12)

    def test_affine_in_field(self, rule):
        """With zero forcing r is linear in u: additive and homogeneous."""
        spec = replace(advection_reaction(), f=_zero)
        mesh = build_structured_unit_square(4)
        first, second = poisson_tanh(), polynomial_diffusion()
        u = AnalyticField(first.exact, first.exact_grad)
        v = AnalyticField(second.exact, second.exact_grad)
        total = AnalyticField(
            lambda x: first.exact(x) + second.exact(x),
            lambda x: first.exact_grad(x) + second.exact_grad(x),
        )
        r_u = assemble_residuals(mesh, u, spec, rule).values
        r_v = assemble_residuals(mesh, v, spec, rule).values
        r_total = assemble_residuals(mesh, total, spec, rule).values
        assert np.max(np.abs(r_total - (r_u + r_v))) <= 1e-12
        for alpha in (-2.5, 0.0, 3.0):
            r_scaled = assemble_residuals(mesh, u.scaled(alpha), spec, rule).values
            assert np.max(np.abs(r_scaled - alpha * r_u)) <= 1e-12

    def test_deterministic(self, rule, random_field):
        mesh = build_structured_unit_square(4)
        a = assemble_residuals(mesh, random_field, poisson_tanh(), rule)
        b = assemble_residuals(mesh, random_field, poisson_tanh(), rule)
        assert np.array_equal(a.values, b.values)
        assert a.mesh_key == mesh.fingerprint

    def test_rejects_low_precision(self):
        mesh = build_structured_unit_square(2)
        rule = QuadRule(
            precision=1,
            barycentric=np.array([[1 / 3, 1 / 3, 1 / 3]]),
            weights=np.array([0.5]),
            exact_degree=1,
        )
        with pytest.raises(ValueError, match="precision"):
            ResidualAssembler(mesh, poisson_tanh(), rule)


class TestLoss:
    """Tests for the loss R_h^2."""

    def _vector(self, values):
        values = np.asarray(values, dtype=float)
        return ResidualVector(values=values, interior_vertices=np.arange(len(values)), mesh_key="test")

    def test_zero(self):
        assert loss(self._vector([0.0, 0.0, 0.0])) == 0.0

    def test_three_four(self):
        r = self._vector([3.0, 4.0])
        assert loss(r) == 25.0
        assert r.norm == 5.0

    def test_permutation_invariant(self):
        values = np.random.default_rng(0).normal(size=12)
        perm = np.random.default_rng(1).permutation(12)
        assert loss(self._vector(values)) == pytest.approx(loss(self._vector(values[perm])), rel=1e-15)


class TestElementalIndexSet:
    """Tests for I_h^E."""

    def test_corner_element(self):
        """A corner element of the n=2 mesh touches only the center."""
        mesh = build_structured_unit_square(2)
        assert list(elemental_index_set(mesh, 0)) == [4]

    def test_interior_element(self):
        mesh = build_structured_unit_square(4)
        sizes = [len(elemental_index_set(mesh, E)) for E in range(mesh.n_triangles)]
        assert 3 in sizes
        assert max(sizes) == 3

    def test_covering(self):
        """The union over all elements is I_h."""
        mesh = build_structured_unit_square(5)
        union = set()
        for E in range(mesh.n_triangles):
            union.update(elemental_index_set(mesh, E).tolist())
        assert sorted(union) == mesh.interior_vertices.tolist()

    def test_out_of_range(self):
        with pytest.raises(MeshError):
            elemental_index_set(build_structured_unit_square(2), 8)


class TestNormConstants:
    """Tests for the norm-equivalence constants."""

    def test_single_interior_vertex(self):
        """n=2: C_h = c_h = 1/|phi_center|_1 = 1/2."""
        mesh = build_structured_unit_square(2)
        constants = measure_norm_constants(mesh)
        assert stiffness_matrix(mesh).toarray() == pytest.approx(np.array([[4.0]]))
        assert constants.C_h == pytest.approx(0.5, rel=1e-12)
        assert constants.c_h == pytest.approx(0.5, rel=1e-12)

    def test_scaling(self):
        """C_h roughly doubles when h halves."""
        c = [measure_norm_constants(build_structured_unit_square(n)).C_h for n in (4, 8, 16)]
        for coarse, fine in zip(c, c[1:]):
            assert 1.6 <= fine / coarse <= 2.4

    @pytest.mark.parametrize("n", [4, 8])
    def test_norm_equivalence(self, n):
        """c_h |v_h|_1 <= |v| <= C_h |v_h|_1 for random coefficient vectors."""
        mesh = build_structured_unit_square(n)
        constants = measure_norm_constants(mesh)
        stiffness = stiffness_matrix(mesh)
        rng = np.random.default_rng(n)
        for v in rng.normal(size=(100, len(mesh.interior_vertices))):
            seminorm = np.sqrt(v @ (stiffness @ v))
            norm = np.linalg.norm(v)
            assert constants.c_h * seminorm <= norm * (1 + 1e-10)
            assert norm <= constants.C_h * seminorm * (1 + 1e-10)

    def test_ordering(self):
        constants = measure_norm_constants(build_structured_unit_square(6))
        assert constants.c_h <= constants.C_h

    def test_sparse_path_matches_dense(self, monkeypatch):
        """Lanczos and dense eigenvalues agree."""
        mesh = build_structured_unit_square(8)
        dense = measure_norm_constants(mesh)
        monkeypatch.setattr(testspace, "DENSE_EIGEN_LIMIT", 0)
        sparse = measure_norm_constants(mesh)
        assert sparse.C_h == pytest.approx(dense.C_h, rel=1e-8)
        assert sparse.c_h == pytest.approx(dense.c_h, rel=1e-8)

    def test_no_interior_vertex(self):
        with pytest.raises(MeshError):
            measure_norm_constants(build_structured_unit_square(1))

    def test_asymptotic(self):
        mesh = build_structured_unit_square(4)
        constants = asymptotic_norm_constants(mesh)
        assert constants.C_h == pytest.approx(4.0 / np.sqrt(2.0))
        assert constants.c_h == 1.0
        assert constants.mode == "asymptotic"
        assert norm_constants(mesh, "asymptotic") == constants

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            norm_constants(build_structured_unit_square(2), "guessed")
