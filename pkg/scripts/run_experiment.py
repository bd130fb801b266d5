"""
Script to run the full experiment: training trace plus convergence study.

Usage:
    python scripts/run_experiment.py --config config/default_config.yaml --out output/
"""

import argparse
import logging
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from vpinn_estimator.config import ConfigError, load_config
from vpinn_estimator.harness import run_convergence, run_trace
from vpinn_estimator.utils import setup_logging

logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(
        description="Run the training trace and the convergence study"
    )
    parser.add_argument(
        "--config",
        type=Path,
        help="Path to config YAML (optional)"
    )
    parser.add_argument(
        "--out",
        type=Path,
        help="Output directory (default: output_dir from the config)"
    )
    parser.add_argument(
        "--skip-trace",
        action="store_true",
        help="Only run the convergence study"
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level"
    )
    args = parser.parse_args()

    try:
        cfg = load_config(args.config, output_dir=str(args.out) if args.out else None)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2

    out = Path(cfg.output_dir)
    setup_logging(level=args.log_level, log_file=out / "run.log")

    if not args.skip_trace:
        trace = run_trace(cfg, out / "trace")
        last = trace.records[-1]
        logger.info(f"Trace: {len(trace.records)} records, final R_h={last.R_h:.3e}, eta={last.eta:.3e}")

    result = run_convergence(cfg, out / "convergence")

    print("\n" + "=" * 60)
    print(f"Problem: {result.problem}")
    print(f"{'n':>4} {'eta':>12} {'|u-u_NN|_1':>12} {'index':>8}")
    for row in result.rows:
        index = f"{row.efficiency_index:.3f}" if row.efficiency_index is not None else "-"
        print(f"{row.n:>4} {row.eta:>12.4e} {row.h1_error:>12.4e} {index:>8}")
    for key, value in result.slopes.items():
        print(f"slope({key}) = {value:.3f}")
    print("=" * 60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
