"""Tests for mesh files, checkpoints and CSV export."""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator.estimator import BREAKDOWN_COLUMNS, assemble_breakdown
from vpinn_estimator.fem.mesh import build_structured_unit_square, refine_red
from vpinn_estimator.fem.quadrature import reference_rule
from vpinn_estimator.fem.testspace import assemble_residuals, measure_norm_constants
from vpinn_estimator.io import (
    CheckpointError,
    MeshLoader,
    MeshLoadError,
    dump_mesh,
    load_checkpoint,
    load_mesh,
    read_table,
    save_checkpoint,
    write_breakdown_csv,
    write_convergence_csv,
    write_slopes_csv,
)
from vpinn_estimator.models import CONVERGENCE_COLUMNS, ConvergenceRow
from vpinn_estimator.nn.network import TrialField, init_params
from vpinn_estimator.problems import poisson_tanh


def _row(n: int, h1_error: float = 0.01) -> ConvergenceRow:
    return ConvergenceRow(
        n=n, h=np.sqrt(2.0) / n, num_interior=(n - 1) ** 2, R_h=1e-4 / 3,
        eta_res=0.1 / 7, eta_loss=1e-5, eta_coef=0.002, eta_rhs=0.003,
        eta=0.1 / 7 + 1e-5 + 0.002 + 0.003, eta_local=0.015, h1_error=h1_error,
        efficiency_index=None if h1_error == 0.0 else 1.5, reliability_ratio=0.6,
    )


class TestMeshFiles:
    """Tests for the plain-text mesh format."""

    def test_round_trip(self, tmp_path):
        """Coordinates survive exactly, including values like 1/3."""
        mesh = refine_red(build_structured_unit_square(3))
        loaded = load_mesh(dump_mesh(mesh, tmp_path / "m.txt"))
        assert np.array_equal(loaded.vertices, mesh.vertices)
        assert np.array_equal(loaded.triangles, mesh.triangles)
        assert loaded.fingerprint == mesh.fingerprint
        assert loaded.name == "m"

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "single.txt"
        path.write_text(
            "# one triangle\n3 1\n\n0 0\n1 0   # corner\n0 1\n0 1 2\n", encoding="utf-8"
        )
        mesh = MeshLoader().load(path, name="single")
        assert mesh.n_triangles == 1
        assert mesh.name == "single"

    def test_missing_file(self, tmp_path):
        with pytest.raises(MeshLoadError, match="not found"):
            load_mesh(tmp_path / "absent.txt")

    @pytest.mark.parametrize(
        "content",
        [
            "",
            "three 1\n",
            "3 1\n0 0\n1 0\n0 1\n",
            "3 1\n0 0\n1 x\n0 1\n0 1 2\n",
            "3 1\n0 0\n1 0\n2 0\n0 1 2\n",
        ],
    )
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "bad.txt"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(MeshLoadError):
            load_mesh(path)


class TestCheckpoints:
    """Tests for parameter checkpoints."""

    def test_round_trip(self, tmp_path):
        params = init_params([2, 7, 5, 1], seed=3)
        path = save_checkpoint(params, tmp_path / "ckpt", metadata={"n": 8})
        assert path.suffix == ".npz"

        loaded, metadata = load_checkpoint(path)
        assert loaded.widths == params.widths
        assert np.array_equal(loaded.flatten(), params.flatten())
        assert metadata == {"n": 8}

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.npz")

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "old.npz"
        np.savez(path, format_version=np.array(99), widths=np.array([2, 1]))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_missing_layer(self, tmp_path):
        path = tmp_path / "broken.npz"
        np.savez(path, format_version=np.array(1), widths=np.array([2, 3, 1]), W0=np.zeros((3, 2)))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_inconsistent_shapes(self, tmp_path):
        path = tmp_path / "shape.npz"
        np.savez(
            path,
            format_version=np.array(1),
            widths=np.array([2, 1]),
            W0=np.zeros((2, 2)),
            b0=np.zeros(1),
        )
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestExport:
    """Tests for the CSV writers."""

    def test_convergence_schema(self, tmp_path):
        path = write_convergence_csv([_row(4), _row(8)], tmp_path / "c.csv")
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(CONVERGENCE_COLUMNS)
        assert header.endswith(",efficiency_index,reliability_ratio")

    def test_full_precision(self, tmp_path):
        """17 significant digits reproduce every double."""
        rows = [_row(4), _row(8)]
        path = write_convergence_csv(rows, tmp_path / "c.csv")
        lines = path.read_text(encoding="utf-8").splitlines()[1:]
        columns = CONVERGENCE_COLUMNS
        for line, row in zip(lines, rows):
            cells = dict(zip(columns, line.split(",")))
            assert float(cells["R_h"]) == row.R_h
            assert float(cells["h"]) == row.h
            assert float(cells["eta"]) == row.eta

    def test_missing_ratio_is_empty(self, tmp_path):
        path = write_convergence_csv([_row(4, h1_error=0.0)], tmp_path / "c.csv")
        data = path.read_text(encoding="utf-8").splitlines()[1]
        assert data.endswith(",,0.59999999999999998")

    def test_breakdown_schema(self, tmp_path):
        spec = poisson_tanh()
        mesh = build_structured_unit_square(2)
        field = TrialField.for_problem(init_params([2, 4, 1], seed=0), spec)
        r = assemble_residuals(mesh, field, spec, reference_rule(3))
        breakdown = assemble_breakdown(mesh, field, spec, r, measure_norm_constants(mesh))

        table = read_table(write_breakdown_csv(breakdown, tmp_path / "b.csv"))
        assert list(table.columns) == BREAKDOWN_COLUMNS
        assert len(table) == mesh.n_triangles + 1
        assert table["eta_E"].iloc[-1] == pytest.approx(breakdown.eta_local, rel=1e-15)

    def test_slopes(self, tmp_path):
        path = write_slopes_csv({"eta": 2.0, "h1_error": 1.9}, tmp_path / "s.csv")
        assert path.read_text(encoding="utf-8") == "quantity,slope\neta,2\nh1_error,1.8999999999999999\n"
