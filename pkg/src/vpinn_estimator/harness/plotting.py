"""Static SVG figures for the convergence study and the training trace."""

import logging
from pathlib import Path
from typing import Dict, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..models import ConvergenceRow, TrainingTrace  # noqa: E402

logger = logging.getLogger(__name__)

# stable element ids and no timestamp, so reruns give identical files
plt.rcParams["svg.hashsalt"] = "vpinn-estimator"
SVG_METADATA = {"Date": None}


def _save(fig, file_path: Union[str, Path]) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(file_path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.info(f"Wrote plot {file_path}")
    return file_path


def plot_convergence(
    rows: Sequence[ConvergenceRow],
    slopes: Dict[str, float],
    file_path: Union[str, Path],
) -> Path:
    """Log-log plot of eta and the H1 error against h."""
    h = [row.h for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    series = [
        ("eta", [row.eta for row in rows], "o-", "tab:red", "estimator"),
        ("h1_error", [row.h1_error for row in rows], "s-", "tab:blue", "$|u - u^{NN}|_{1}$"),
    ]
    for key, values, style, color, label in series:
        if key in slopes:
            label = f"{label} (slope {slopes[key]:.2f})"
        if all(v > 0 for v in values):
            ax.loglog(h, values, style, color=color, label=label)
    ax.set_xlabel("h")
    ax.set_ylabel("error / estimator")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, file_path)


def plot_trace(trace: TrainingTrace, file_path: Union[str, Path]) -> Path:
    """Semilog plot of the estimator terms and the true error during training."""
    epochs = [r.epoch for r in trace.records]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, label in [
        ("eta_rhs", r"$\eta_{rhs}$"),
        ("eta_coef", r"$\eta_{coef}$"),
        ("eta_res", r"$\eta_{res}$"),
        ("eta_loss", r"$\eta_{loss}$"),
        ("eta", r"$\eta$"),
        ("h1_error", r"$|u - u^{NN}|_{1}$"),
    ]:
        values = [getattr(r, key) for r in trace.records]
        if any(v is None for v in values):
            continue
        positive = [(e, v) for e, v in zip(epochs, values) if v > 0]
        if positive:
            ax.semilogy(*zip(*positive), marker=".", label=label)
    ax.set_xlabel("epoch")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, file_path)
