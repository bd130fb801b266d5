"""Neural trial functions and their training."""

from .adam import Adam
from .network import (
    MLPParams,
    NetworkError,
    TrialField,
    UnitSquareMultiplier,
    eval_with_gradient,
    init_params,
    loss_gradient,
    unit_multiplier,
)
from .training import TrainingDivergedError, checkpoint_record, train

__all__ = [
    "Adam",
    "MLPParams",
    "NetworkError",
    "TrialField",
    "UnitSquareMultiplier",
    "eval_with_gradient",
    "init_params",
    "loss_gradient",
    "unit_multiplier",
    "TrainingDivergedError",
    "checkpoint_record",
    "train",
]
