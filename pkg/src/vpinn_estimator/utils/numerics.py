"""Guards for floating-point results."""

import numpy as np


class NumericDomainError(ArithmeticError):
    """Raised when a field, coefficient or intermediate value is not finite."""
    pass


def ensure_finite(values, what: str) -> np.ndarray:
    """
    Return ``values`` as an array, raising if any entry is NaN or infinite.

    Args:
        values: Array-like of floats
        what: Human-readable name used in the error message

    Raises:
        NumericDomainError: If any entry is not finite
    """
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise NumericDomainError(f"{what}: {bad} non-finite value(s) out of {arr.size}")
    return arr
