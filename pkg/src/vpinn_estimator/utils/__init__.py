"""Utility functions."""

from .logging import setup_logging
from .numerics import NumericDomainError, ensure_finite

__all__ = ["setup_logging", "NumericDomainError", "ensure_finite"]
