"""Point-evaluable scalar fields with spatial gradients."""

from typing import Callable, Protocol, Tuple

import numpy as np


class Field(Protocol):
    """Anything that can report value and gradient at a batch of points."""

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Args:
            points: (..., 2) coordinates

        Returns:
            value (...,) and gradient (..., 2)
        """
        ...


class AnalyticField:
    """
    Closed-form field, e.g. an exact solution injected in place of the network.

    Args:
        value: (..., 2) -> (...)
        gradient: (..., 2) -> (..., 2)
        scale: Constant factor applied to both
    """

    def __init__(
        self,
        value: Callable[[np.ndarray], np.ndarray],
        gradient: Callable[[np.ndarray], np.ndarray],
        scale: float = 1.0,
    ):
        self.value = value
        self.gradient = gradient
        self.scale = scale

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        return self.scale * self.value(points), self.scale * self.gradient(points)

    def scaled(self, factor: float) -> "AnalyticField":
        return AnalyticField(self.value, self.gradient, self.scale * factor)


def zero_field() -> AnalyticField:
    return AnalyticField(
        lambda x: np.zeros(x.shape[:-1]),
        lambda x: np.zeros(x.shape),
    )
