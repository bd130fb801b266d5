"""
Command-line entry point.

Usage:
    vpinn convergence --config config/default_config.yaml --out output/
    vpinn trace --seed 3
    vpinn estimate --n 8 --checkpoint output/checkpoint_n8.npz
    vpinn selftest

Exit codes: 0 success, 1 numeric failure, 2 configuration error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .config import ConfigError, ExperimentConfig, load_config
from .estimator.breakdown import EstimatorError, assemble_breakdown, efficiency_index
from .fem.mesh import MeshError, build_structured_unit_square
from .fem.quadrature import reference_rule
from .fem.testspace import assemble_residuals, norm_constants
from .harness.convergence import run_convergence
from .harness.selftest import run_selftest
from .harness.slopes import SlopeFitError
from .harness.trace import run_trace
from .io.checkpoint import CheckpointError, load_checkpoint
from .io.export import write_breakdown_csv
from .io.mesh_io import MeshLoadError, load_mesh
from .nn.network import NetworkError, TrialField
from .nn.training import TrainingDivergedError
from .problems.manufactured import ProblemError, get_problem
from .problems.norms import h1_error
from .utils.logging import setup_logging
from .utils.numerics import NumericDomainError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or key = value config file")
    common.add_argument("--out", type=Path, help="Output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="Base seed (overrides config)")
    common.add_argument(
        "--ch-mode",
        choices=["measured", "asymptotic"],
        help="How C_h is obtained (overrides config)",
    )
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )

    parser = argparse.ArgumentParser(
        prog="vpinn",
        description="VPINN training with a residual-type a posteriori error estimator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    convergence = sub.add_parser("convergence", parents=[common], help="Convergence study over meshes")
    convergence.add_argument(
        "--inject-exact",
        action="store_true",
        help="Skip training and evaluate the exact solution as u_NN",
    )
    sub.add_parser("trace", parents=[common], help="Estimator terms during one training run")

    estimate = sub.add_parser("estimate", parents=[common], help="Estimator breakdown of a checkpoint")
    mesh_group = estimate.add_mutually_exclusive_group(required=True)
    mesh_group.add_argument("--n", type=int, help="Structured unit-square mesh with n x n cells")
    mesh_group.add_argument("--mesh", type=Path, help="Plain-text mesh file")
    estimate.add_argument("--checkpoint", type=Path, required=True, help="Parameter checkpoint (.npz)")

    sub.add_parser("selftest", parents=[common], help="Run the numerical property checks")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the config file and apply command-line overrides."""
    cfg = load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = str(args.out)
    if args.ch_mode is not None:
        updates["estimator"] = cfg.estimator.model_copy(update={"ch_mode": args.ch_mode})
    return cfg.model_copy(update=updates)


def cmd_estimate(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    spec = get_problem(cfg.problem, cfg.lift)
    mesh = load_mesh(args.mesh) if args.mesh else build_structured_unit_square(args.n)
    params, metadata = load_checkpoint(args.checkpoint)
    field = TrialField.for_problem(params, spec)

    assembly = reference_rule(cfg.estimator.assembly_precision)
    verification = reference_rule(cfg.estimator.verification_precision)
    constants = norm_constants(mesh, cfg.estimator.ch_mode)
    r = assemble_residuals(mesh, field, spec, assembly)
    breakdown = assemble_breakdown(mesh, field, spec, r, constants, assembly, verification)

    out = Path(cfg.output_dir)
    write_breakdown_csv(breakdown, out / f"breakdown_{mesh.name}.csv")
    logger.info(
        f"{mesh!r}: R_h={r.norm:.4e}, eta={breakdown.eta:.4e}, eta_local={breakdown.eta_local:.4e} "
        f"(checkpoint metadata {metadata})"
    )
    if spec.has_exact:
        error = h1_error(mesh, field, spec, verification)
        index = efficiency_index(breakdown, error) if error > 0 else float("nan")
        logger.info(f"|u - u_NN|_1={error:.4e}, efficiency index={index:.4g}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level)

    try:
        cfg = resolve_config(args)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    try:
        if args.command == "convergence":
            run_convergence(cfg, inject_exact=args.inject_exact)
        elif args.command == "trace":
            run_trace(cfg)
        elif args.command == "estimate":
            return cmd_estimate(args, cfg)
        elif args.command == "selftest":
            results = run_selftest()
            failed = [r.name for r in results if not r.passed]
            if failed:
                logger.error(f"{len(failed)} check(s) failed: {', '.join(failed)}")
                return EXIT_NUMERIC
            logger.info(f"All {len(results)} checks passed")
    except (ConfigError, ProblemError, MeshError, MeshLoadError, CheckpointError, NetworkError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_CONFIG
    except (NumericDomainError, TrainingDivergedError, EstimatorError, SlopeFitError) as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
