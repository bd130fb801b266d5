"""
CSV writers.

All tables go through pandas with 17 significant digits, so files are
byte-stable across reruns with the same seed.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Union

import pandas as pd

from ..estimator.breakdown import BREAKDOWN_COLUMNS, EstimatorBreakdown
from ..models import CONVERGENCE_COLUMNS, TRACE_COLUMNS, ConvergenceRow, TrainingTrace

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _write(rows: List[Dict], columns: List[str], file_path: Union[str, Path]) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(df)} rows to {file_path}")
    return file_path


def write_trace_csv(trace: TrainingTrace, file_path: Union[str, Path]) -> Path:
    """``epoch,R_h,eta_rhs,eta_coef,eta_res,eta_loss,eta,h1_error``."""
    return _write(trace.rows(), TRACE_COLUMNS, file_path)


def write_breakdown_csv(breakdown: EstimatorBreakdown, file_path: Union[str, Path]) -> Path:
    """One row per element plus the trailing ``global`` row."""
    return _write(breakdown.rows(), BREAKDOWN_COLUMNS, file_path)


def write_convergence_csv(rows: Iterable[ConvergenceRow], file_path: Union[str, Path]) -> Path:
    return _write([row.model_dump() for row in rows], CONVERGENCE_COLUMNS, file_path)


def write_slopes_csv(slopes: Dict[str, float], file_path: Union[str, Path]) -> Path:
    rows = [{"quantity": name, "slope": value} for name, value in slopes.items()]
    return _write(rows, ["quantity", "slope"], file_path)


def read_table(file_path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(file_path)
