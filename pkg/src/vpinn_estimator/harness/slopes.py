"""Log-log slope fitting."""

from typing import Iterable, Tuple

import numpy as np


class SlopeFitError(ValueError):
    """Raised when a convergence rate cannot be fitted."""
    pass


def fit_slope(pairs: Iterable[Tuple[float, float]]) -> float:
    """
    Least-squares slope of log(value) against log(h).

    Args:
        pairs: (h, value) with h > 0 and value > 0

    Raises:
        SlopeFitError: Fewer than two pairs, nonpositive entries or a single h
    """
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise SlopeFitError(f"need at least two (h, value) pairs, got {data.shape[0] if data.ndim else 0}")
    if not np.all(np.isfinite(data)):
        raise SlopeFitError("non-finite values cannot be fitted")
    if np.any(data <= 0.0):
        bad = data[np.any(data <= 0.0, axis=1)]
        raise SlopeFitError(
            f"log-log fit needs positive h and values; got {bad.tolist()} "
            f"(a zero error means nothing converges on this family)"
        )
    log_h, log_v = np.log(data[:, 0]), np.log(data[:, 1])
    if np.ptp(log_h) == 0.0:
        raise SlopeFitError("all pairs share the same h")
    slope, _ = np.polyfit(log_h, log_v, 1)
    return float(slope)
