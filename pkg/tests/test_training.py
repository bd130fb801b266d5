"""Tests for the optimizer and the training loop."""

import pytest
import numpy as np
from dataclasses import replace
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator.config import TrainConfig
from vpinn_estimator.fem.mesh import build_structured_unit_square
from vpinn_estimator.fem.quadrature import reference_rule
from vpinn_estimator.fem.testspace import assemble_residuals, asymptotic_norm_constants
from vpinn_estimator.io.export import write_trace_csv
from vpinn_estimator.models import TrainingTrace
from vpinn_estimator.nn.adam import Adam
from vpinn_estimator.nn.network import TrialField, init_params
from vpinn_estimator.estimator.breakdown import assemble_breakdown
from vpinn_estimator.fem.testspace import ResidualAssembler
from vpinn_estimator.nn.training import TrainingDivergedError, checkpoint_record, train
from vpinn_estimator.problems.fields import AnalyticField
from vpinn_estimator.problems import poisson_tanh, polynomial_diffusion


def _zeros(x):
    return np.zeros(x.shape[:-1])


def _zero_vectors(x):
    return np.zeros(x.shape)


@pytest.fixture
def homogeneous_spec():
    """f = 0, g = 0: the zero function solves it."""
    return replace(
        polynomial_diffusion(),
        name="homogeneous",
        f=_zeros, g=_zeros, lift=_zeros, lift_grad=_zero_vectors,
        exact=_zeros, exact_grad=_zero_vectors,
    )


class TestAdam:
    """Tests for the Adam optimizer."""

    def test_first_step_is_learning_rate(self):
        """Bias correction makes the first step lr * sign(grad)."""
        cfg = TrainConfig(learning_rate=1e-2)
        adam = Adam(3, cfg)
        theta = np.array([1.0, 2.0, 3.0])
        updated = adam.step(theta, np.array([0.5, -4.0, 2.0]), epoch=0)
        assert np.allclose(updated, theta - 1e-2 * np.array([1.0, -1.0, 1.0]), rtol=1e-6)
        assert np.array_equal(theta, [1.0, 2.0, 3.0])

    def test_zero_gradient_keeps_parameters(self):
        adam = Adam(2, TrainConfig())
        theta = np.array([0.3, -0.7])
        assert np.array_equal(adam.step(theta, np.zeros(2), epoch=0), theta)

    def test_learning_rate_schedule(self):
        """Halved every 2000 epochs."""
        cfg = TrainConfig()
        assert cfg.learning_rate_at(0) == 1e-3
        assert cfg.learning_rate_at(1999) == 1e-3
        assert cfg.learning_rate_at(2000) == pytest.approx(5e-4)
        assert cfg.learning_rate_at(4000) == pytest.approx(2.5e-4)


class TestTrain:
    """Tests for train."""

    @pytest.fixture
    def mesh(self):
        return build_structured_unit_square(3)

    @pytest.fixture
    def small_cfg(self):
        return TrainConfig(epochs=20, checkpoint_every=5, learning_rate=1e-2)

    def _train(self, mesh, cfg, spec=None, widths=(2, 5, 1), seed=0):
        spec = spec or poisson_tanh()
        return train(
            mesh,
            spec,
            init_params(list(widths), seed),
            cfg,
            constants=asymptotic_norm_constants(mesh),
        )

    def test_exact_minimizer_exits_immediately(self, mesh, homogeneous_spec):
        """Zero data and zero weights give R_h = 0 at epoch 0."""
        cfg = TrainConfig(epochs=50, checkpoint_every=10)
        init = init_params([2, 5, 1], seed=0)
        init = init.with_flat(np.zeros(init.n_params))
        params, trace = train(mesh, homogeneous_spec, init, cfg)
        assert trace.initial_R_h == 0.0
        assert trace.stopped_early
        assert [r.epoch for r in trace.records] == [0]
        assert trace.records[0].eta == 0.0
        assert np.array_equal(params.flatten(), init.flatten())

    def test_trace_length(self, mesh, small_cfg):
        """floor(epochs / period) + 1 records."""
        _, trace = self._train(mesh, small_cfg)
        assert [r.epoch for r in trace.records] == [0, 5, 10, 15, 20]
        assert len(trace.records) == small_cfg.epochs // small_cfg.checkpoint_every + 1
        assert not trace.stopped_early

    def test_trace_length_uneven_period(self, mesh):
        cfg = TrainConfig(epochs=10, checkpoint_every=4)
        _, trace = self._train(mesh, cfg)
        assert [r.epoch for r in trace.records] == [0, 4, 8]

    def test_best_iterate(self, mesh, small_cfg):
        """The returned parameters are at least as good as every checkpoint."""
        spec = poisson_tanh()
        params, trace = self._train(mesh, small_cfg, spec)
        best = assemble_residuals(
            mesh, TrialField.for_problem(params, spec), spec, reference_rule(3)
        ).norm
        assert best == pytest.approx(trace.best_R_h, rel=1e-14)
        assert all(best <= r.R_h * (1 + 1e-14) for r in trace.records)

    def test_logged_residual_matches_assembly(self, mesh, small_cfg):
        """The epoch-0 record equals R_h recomputed from the initial parameters."""
        spec = poisson_tanh()
        _, trace = self._train(mesh, small_cfg, spec)
        init = init_params([2, 5, 1], seed=0)
        fresh = assemble_residuals(mesh, TrialField.for_problem(init, spec), spec, reference_rule(3))
        assert trace.records[0].R_h == fresh.norm
        assert trace.initial_R_h == fresh.norm

    def test_records_carry_error(self, mesh, small_cfg):
        _, trace = self._train(mesh, small_cfg)
        for record in trace.records:
            assert record.h1_error is not None and record.h1_error > 0
            parts = record.eta_res + record.eta_loss + record.eta_coef + record.eta_rhs
            assert record.eta == pytest.approx(parts, rel=1e-14)

    def test_deterministic(self, mesh, small_cfg, tmp_path):
        """Two identical runs give byte-identical trace CSVs."""
        _, first = self._train(mesh, small_cfg)
        _, second = self._train(mesh, small_cfg)
        a = write_trace_csv(first, tmp_path / "a.csv").read_bytes()
        b = write_trace_csv(second, tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_divergence_guard(self, mesh):
        """A runaway learning rate trips the guard and keeps the partial trace."""
        cfg = TrainConfig(epochs=10, checkpoint_every=1, learning_rate=100.0, divergence_factor=1.5)
        with pytest.raises(TrainingDivergedError) as exc_info:
            self._train(mesh, cfg)
        trace = exc_info.value.trace
        assert isinstance(trace, TrainingTrace)
        assert trace.records[0].epoch == 0

    @pytest.mark.slow
    def test_default_run_reduces_loss(self):
        """n=8, default network and optimizer: R_h drops by two orders and reruns are identical."""
        mesh = build_structured_unit_square(8)
        spec = poisson_tanh()
        cfg = TrainConfig()
        runs = []
        for _ in range(2):
            params, trace = train(mesh, spec, init_params([2, 50, 50, 50, 1], seed=0), cfg)
            runs.append(trace)
        final = assemble_residuals(mesh, TrialField.for_problem(params, spec), spec, reference_rule(3)).norm
        assert final <= 1e-2 * runs[0].initial_R_h
        assert runs[0].rows() == runs[1].rows()

    def test_short_run_reduces_loss(self, tmp_path):
        """n=4, small network, 500 epochs: R_h drops by an order and reruns are byte-identical."""
        mesh = build_structured_unit_square(4)
        cfg = TrainConfig(epochs=500, checkpoint_every=100, learning_rate=1e-2)
        runs = [self._train(mesh, cfg, widths=(2, 10, 10, 1))[1] for _ in range(2)]
        assert runs[0].best_R_h <= 0.1 * runs[0].initial_R_h
        a = write_trace_csv(runs[0], tmp_path / "a.csv").read_bytes()
        b = write_trace_csv(runs[1], tmp_path / "b.csv").read_bytes()
        assert a == b


class TestCheckpointRecord:
    """Tests for checkpoint_record."""

    @pytest.fixture
    def mesh(self):
        return build_structured_unit_square(4)

    def test_matches_breakdown(self, mesh):
        spec = poisson_tanh()
        field = TrialField.for_problem(init_params([2, 6, 1], seed=2), spec)
        assembler = ResidualAssembler(mesh, spec, reference_rule(3))
        constants = asymptotic_norm_constants(mesh)
        record = checkpoint_record(40, field, mesh, spec, assembler, constants)
        r = assembler.assemble(field)
        breakdown = assemble_breakdown(mesh, field, spec, r, constants, assembler.rule)
        assert record.epoch == 40
        assert record.R_h == r.norm
        assert record.eta == breakdown.eta
        assert record.eta_res == breakdown.eta_res
        assert record.h1_error > 0

    def test_exact_field(self, mesh):
        """The injected exact solution of a polynomial problem scores zero."""
        spec = polynomial_diffusion()
        field = AnalyticField(spec.exact, spec.exact_grad)
        assembler = ResidualAssembler(mesh, spec, reference_rule(3))
        record = checkpoint_record(0, field, mesh, spec, assembler, asymptotic_norm_constants(mesh))
        assert record.R_h <= 1e-9
        assert record.eta <= 1e-8
        assert record.h1_error <= 1e-14
