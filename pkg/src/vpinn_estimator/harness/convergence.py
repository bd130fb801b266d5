"""
Convergence study over a family of structured meshes.

For each n in ``mesh_sizes`` a network is trained on the n x n mesh (seed
``seed + index``), the estimator and the true error are evaluated on the
best parameters and a ConvergenceRow is produced. Slopes are fitted on the
rows left after dropping the ``tail_drop`` coarsest meshes.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

from ..config import ExperimentConfig
from ..estimator.breakdown import EstimatorBreakdown, assemble_breakdown, efficiency_index
from ..fem.mesh import Mesh, build_structured_unit_square
from ..fem.quadrature import reference_rule
from ..fem.testspace import assemble_residuals, norm_constants
from ..io.checkpoint import save_checkpoint
from ..io.export import write_breakdown_csv, write_convergence_csv, write_slopes_csv
from ..models import ConvergenceResult, ConvergenceRow
from ..nn.network import MLPParams, TrialField, init_params
from ..nn.training import TrainingDivergedError, train
from ..problems.fields import AnalyticField, Field
from ..problems.manufactured import ProblemError, ProblemSpec, get_problem
from ..problems.norms import h1_error
from .plotting import plot_convergence
from .slopes import SlopeFitError, fit_slope

logger = logging.getLogger(__name__)

SLOPE_QUANTITIES = ("eta", "eta_local", "h1_error")


def evaluate_field(
    n: int,
    mesh: Mesh,
    spec: ProblemSpec,
    field: Field,
    cfg: ExperimentConfig,
) -> Tuple[ConvergenceRow, EstimatorBreakdown]:
    """Estimator, true error and derived ratios of one field on one mesh."""
    if not spec.has_exact:
        raise ProblemError(f"problem {spec.name!r} has no exact solution; no convergence study")
    assembly = reference_rule(cfg.estimator.assembly_precision)
    verification = reference_rule(cfg.estimator.verification_precision)
    constants = norm_constants(mesh, cfg.estimator.ch_mode)

    r = assemble_residuals(mesh, field, spec, assembly)
    breakdown = assemble_breakdown(mesh, field, spec, r, constants, assembly, verification)
    error = h1_error(mesh, field, spec, verification)

    row = ConvergenceRow(
        n=n,
        h=mesh.h,
        num_interior=len(mesh.interior_vertices),
        R_h=r.norm,
        eta_res=breakdown.eta_res,
        eta_loss=breakdown.eta_loss,
        eta_coef=breakdown.eta_coef,
        eta_rhs=breakdown.eta_rhs,
        eta=breakdown.eta,
        eta_local=breakdown.eta_local,
        h1_error=error,
        efficiency_index=efficiency_index(breakdown, error) if error > 0.0 else None,
        reliability_ratio=error / breakdown.eta_local if breakdown.eta_local > 0.0 else None,
    )
    return row, breakdown


def run_mesh(
    cfg: ExperimentConfig,
    index: int,
) -> Tuple[ConvergenceRow, MLPParams, EstimatorBreakdown]:
    """
    Train and evaluate on the index-th mesh of the family.

    Module-level so it can run in a worker process; the problem is rebuilt
    from its registry name.
    """
    n = cfg.mesh_sizes[index]
    spec = get_problem(cfg.problem, cfg.lift)
    mesh = build_structured_unit_square(n)
    seed = cfg.seed_for_mesh(index)
    init = init_params(cfg.network.widths, seed)

    logger.info(f"[{index + 1}/{len(cfg.mesh_sizes)}] n={n}: {mesh!r}, seed={seed}")
    params, _ = train(
        mesh,
        spec,
        init,
        cfg.training,
        rule=reference_rule(cfg.estimator.assembly_precision),
        constants=norm_constants(mesh, cfg.estimator.ch_mode),
        verification_rule=reference_rule(cfg.estimator.verification_precision),
    )
    row, breakdown = evaluate_field(n, mesh, spec, TrialField.for_problem(params, spec), cfg)
    return row, params, breakdown


def fit_slopes(rows: List[ConvergenceRow], tail_drop: int) -> dict:
    """Slopes of eta, eta_local and h1_error over the fitted tail."""
    tail = rows[tail_drop:]
    return {
        key: fit_slope([(row.h, getattr(row, key)) for row in tail])
        for key in SLOPE_QUANTITIES
    }


def _finish(
    cfg: ExperimentConfig,
    rows: List[ConvergenceRow],
    out_dir: Optional[Path],
) -> ConvergenceResult:
    ratios = [row.reliability_ratio for row in rows if row.reliability_ratio is not None]
    result = ConvergenceResult(
        problem=cfg.problem,
        rows=rows,
        tail_drop=cfg.tail_drop,
        reliability_constant=max(ratios) if ratios else None,
    )
    if out_dir is not None:
        write_convergence_csv(rows, out_dir / "convergence.csv")

    try:
        result.slopes = fit_slopes(rows, cfg.tail_drop)
    except SlopeFitError as e:
        logger.error(f"Slope fit rejected: {e}")
        raise

    for key, value in result.slopes.items():
        logger.info(f"Slope of {key}: {value:.3f}")
    if result.reliability_constant is not None:
        logger.info(f"Reliability constant max(|u - u_NN|_1 / eta_local) = {result.reliability_constant:.4g}")

    if out_dir is not None:
        write_slopes_csv(result.slopes, out_dir / "slopes.csv")
        plot_convergence(rows, result.slopes, out_dir / "convergence.svg")
    return result


def run_convergence(
    cfg: ExperimentConfig,
    out_dir: Optional[Union[str, Path]] = None,
    inject_exact: bool = False,
) -> ConvergenceResult:
    """
    Run the whole study.

    Args:
        cfg: Experiment configuration (at least two meshes)
        out_dir: Where CSVs, checkpoints and the plot go (cfg.output_dir if None)
        inject_exact: Skip training and evaluate the exact solution as u_NN

    Raises:
        TrainingDivergedError: After writing the rows finished so far
        SlopeFitError: If the tail cannot be fitted (the CSV is still written)
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(cfg.mesh_sizes) < 2:
        raise SlopeFitError(f"a convergence study needs at least two meshes, got {cfg.mesh_sizes}")

    logger.info(
        f"Convergence study: problem={cfg.problem}, lift={cfg.lift}, meshes={cfg.mesh_sizes}, "
        f"network={cfg.network.widths}, C_h={cfg.estimator.ch_mode}"
    )
    rows: List[ConvergenceRow] = []

    if inject_exact:
        spec = get_problem(cfg.problem, cfg.lift)
        exact = AnalyticField(spec.exact, spec.exact_grad)
        for n in cfg.mesh_sizes:
            row, breakdown = evaluate_field(n, build_structured_unit_square(n), spec, exact, cfg)
            rows.append(row)
            write_breakdown_csv(breakdown, out / f"breakdown_n{n}.csv")
        return _finish(cfg, rows, out)

    indices = range(len(cfg.mesh_sizes))
    try:
        if cfg.parallel_meshes:
            with ProcessPoolExecutor(max_workers=len(cfg.mesh_sizes)) as pool:
                results = pool.map(run_mesh, [cfg] * len(cfg.mesh_sizes), indices)
                for index, (row, params, breakdown) in zip(indices, results):
                    _store(out, cfg.mesh_sizes[index], row, params, breakdown, rows)
        else:
            for index in indices:
                row, params, breakdown = run_mesh(cfg, index)
                _store(out, cfg.mesh_sizes[index], row, params, breakdown, rows)
    except TrainingDivergedError:
        logger.error(f"Training diverged after {len(rows)} mesh(es); writing partial results")
        write_convergence_csv(rows, out / "convergence.csv")
        raise

    return _finish(cfg, rows, out)


def _store(
    out: Path,
    n: int,
    row: ConvergenceRow,
    params: MLPParams,
    breakdown: EstimatorBreakdown,
    rows: List[ConvergenceRow],
) -> None:
    rows.append(row)
    save_checkpoint(params, out / f"checkpoint_n{n}.npz", metadata={"n": n})
    write_breakdown_csv(breakdown, out / f"breakdown_n{n}.csv")
    logger.info(
        f"n={n}: R_h={row.R_h:.3e}, eta={row.eta:.4e}, |u - u_NN|_1={row.h1_error:.4e}, "
        f"index={row.efficiency_index}"
    )
