"""Single training run with the estimator terms logged at every checkpoint."""

import logging
from pathlib import Path
from typing import Optional, Union

from ..config import ExperimentConfig
from ..fem.mesh import build_structured_unit_square
from ..fem.quadrature import reference_rule
from ..fem.testspace import norm_constants
from ..io.checkpoint import save_checkpoint
from ..io.export import write_trace_csv
from ..models import TrainingTrace
from ..nn.network import init_params
from ..nn.training import TrainingDivergedError, train
from ..problems.manufactured import get_problem
from .plotting import plot_trace

logger = logging.getLogger(__name__)


def run_trace(cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None) -> TrainingTrace:
    """
    Train once on the ``trace_mesh`` mesh and write trace.csv, trace.svg and
    the best parameters.

    Raises:
        TrainingDivergedError: After writing the partial trace
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    n = cfg.trace_mesh
    spec = get_problem(cfg.problem, cfg.lift)
    mesh = build_structured_unit_square(n)
    logger.info(f"Training trace on {mesh!r} (problem={cfg.problem}, seed={cfg.seed})")

    try:
        params, trace = train(
            mesh,
            spec,
            init_params(cfg.network.widths, cfg.seed),
            cfg.training,
            rule=reference_rule(cfg.estimator.assembly_precision),
            constants=norm_constants(mesh, cfg.estimator.ch_mode),
            verification_rule=reference_rule(cfg.estimator.verification_precision),
        )
    except TrainingDivergedError as e:
        write_trace_csv(e.trace, out / "trace.csv")
        raise

    write_trace_csv(trace, out / "trace.csv")
    plot_trace(trace, out / "trace.svg")
    save_checkpoint(params, out / f"checkpoint_n{n}.npz", metadata={"n": n})
    return trace
