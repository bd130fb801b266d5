"""Tests for the command-line entry point."""

import pytest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator import cli
from vpinn_estimator.io.checkpoint import save_checkpoint
from vpinn_estimator.io.export import read_table
from vpinn_estimator.io.mesh_io import dump_mesh
from vpinn_estimator.fem.mesh import build_structured_unit_square
from vpinn_estimator.nn.network import init_params


@pytest.fixture
def checkpoint(tmp_path):
    return save_checkpoint(init_params([2, 6, 1], seed=0), tmp_path / "ckpt.npz", metadata={"n": 4})


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(
        "mesh_sizes = [2, 4]\n"
        "trace_mesh = 3\n"
        "tail_drop = 0\n"
        "network.hidden = [4]\n"
        "training.epochs = 2\n"
        "training.checkpoint_every = 1\n"
        "estimator.ch_mode = asymptotic\n",
        encoding="utf-8",
    )
    return path


class TestParser:
    """Tests for argument parsing."""

    def test_estimate_needs_a_mesh(self, checkpoint):
        with pytest.raises(SystemExit):
            cli.main(["estimate", "--checkpoint", str(checkpoint)])

    def test_mesh_options_exclusive(self, checkpoint, tmp_path):
        with pytest.raises(SystemExit):
            cli.main(["estimate", "--n", "4", "--mesh", str(tmp_path / "m.txt"), "--checkpoint", str(checkpoint)])

    def test_overrides(self, tmp_path):
        args = cli.build_parser().parse_args(
            ["trace", "--seed", "3", "--ch-mode", "asymptotic", "--out", str(tmp_path)]
        )
        cfg = cli.resolve_config(args)
        assert cfg.seed == 3
        assert cfg.estimator.ch_mode == "asymptotic"
        assert cfg.output_dir == str(tmp_path)


class TestExitCodes:
    """Tests for main's exit codes."""

    def test_selftest_passes(self):
        assert cli.main(["selftest"]) == cli.EXIT_OK

    def test_missing_config(self, tmp_path):
        assert cli.main(["trace", "--config", str(tmp_path / "absent.yaml")]) == cli.EXIT_CONFIG

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("mesh_sizes = [8, 4]\n", encoding="utf-8")
        assert cli.main(["convergence", "--config", str(path)]) == cli.EXIT_CONFIG

    def test_estimate_structured(self, checkpoint, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["estimate", "--n", "4", "--checkpoint", str(checkpoint), "--out", str(out)])
        assert code == cli.EXIT_OK
        table = read_table(out / "breakdown_unit_square_n4.csv")
        assert len(table) == 32 + 1

    def test_estimate_mesh_file(self, checkpoint, tmp_path):
        mesh_path = dump_mesh(build_structured_unit_square(3), tmp_path / "three.txt")
        out = tmp_path / "out"
        code = cli.main(["estimate", "--mesh", str(mesh_path), "--checkpoint", str(checkpoint), "--out", str(out)])
        assert code == cli.EXIT_OK
        assert (out / "breakdown_three.csv").exists()

    def test_estimate_missing_checkpoint(self, tmp_path):
        code = cli.main(["estimate", "--n", "4", "--checkpoint", str(tmp_path / "absent.npz"), "--out", str(tmp_path)])
        assert code == cli.EXIT_CONFIG

    def test_estimate_bad_mesh_file(self, checkpoint, tmp_path):
        mesh_path = tmp_path / "bad.txt"
        mesh_path.write_text("3 1\n0 0\n", encoding="utf-8")
        code = cli.main(["estimate", "--mesh", str(mesh_path), "--checkpoint", str(checkpoint), "--out", str(tmp_path)])
        assert code == cli.EXIT_CONFIG

    def test_trace(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["trace", "--config", str(tiny_config), "--out", str(out)]) == cli.EXIT_OK
        assert len(read_table(out / "trace.csv")) == 3

    def test_convergence_with_exact_solution(self, tiny_config, tmp_path):
        """A zero error cannot be fitted: numeric failure after the rows are written."""
        out = tmp_path / "out"
        code = cli.main(["convergence", "--config", str(tiny_config), "--out", str(out), "--inject-exact"])
        assert code == cli.EXIT_NUMERIC
        assert (out / "convergence.csv").exists()
