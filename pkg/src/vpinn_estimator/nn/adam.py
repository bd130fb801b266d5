"""Adaptive-moment optimizer over a flat parameter vector."""

import numpy as np

from ..config import TrainConfig


class Adam:
    """
    Adam with bias correction and a step-decay learning rate.

    Args:
        n_params: Length of the parameter vector
        cfg: Learning-rate schedule and moment coefficients
    """

    def __init__(self, n_params: int, cfg: TrainConfig):
        self.cfg = cfg
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.steps = 0

    def step(self, theta: np.ndarray, grad: np.ndarray, epoch: int) -> np.ndarray:
        """Return the updated parameters; ``theta`` is left untouched."""
        cfg = self.cfg
        self.steps += 1
        self.m = cfg.beta1 * self.m + (1.0 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1.0 - cfg.beta2) * grad * grad
        m_hat = self.m / (1.0 - cfg.beta1 ** self.steps)
        v_hat = self.v / (1.0 - cfg.beta2 ** self.steps)
        return theta - cfg.learning_rate_at(epoch) * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
