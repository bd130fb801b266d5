"""Configuration models."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from .problems.manufactured import LIFT_MODES, PROBLEMS

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Exception raised for unreadable or invalid configuration."""
    pass


class NetworkConfig(BaseModel):
    """Network architecture."""

    hidden: List[int] = Field(default_factory=lambda: [50, 50, 50], description="Hidden layer widths")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {"example": {"hidden": [50, 50, 50]}},
    }

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("hidden widths must be positive")
        return v

    @property
    def widths(self) -> List[int]:
        """Full layer widths including the 2 inputs and the scalar output."""
        return [2, *self.hidden, 1]


class TrainConfig(BaseModel):
    """Optimizer and training-loop settings."""

    epochs: int = Field(10000, ge=1, description="Number of optimizer steps")
    learning_rate: float = Field(1e-3, gt=0.0, description="Initial learning rate")
    lr_decay: float = Field(0.5, gt=0.0, le=1.0, description="Factor applied every lr_decay_every epochs")
    lr_decay_every: int = Field(2000, ge=1)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)
    checkpoint_every: int = Field(500, ge=1, description="Trace period in epochs")
    tolerance: float = Field(0.0, ge=0.0, description="Stop once R_h <= tolerance")
    divergence_factor: float = Field(1e6, gt=1.0, description="Abort once R_h exceeds this times the initial R_h")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "example": {
                "epochs": 10000,
                "learning_rate": 0.001,
                "lr_decay": 0.5,
                "lr_decay_every": 2000,
                "checkpoint_every": 500,
            }
        },
    }

    def learning_rate_at(self, epoch: int) -> float:
        return self.learning_rate * self.lr_decay ** (epoch // self.lr_decay_every)


class EstimatorConfig(BaseModel):
    """Estimator settings."""

    ch_mode: Literal["measured", "asymptotic"] = Field("measured", description="How C_h is obtained")
    assembly_precision: int = Field(3, description="Quadrature precision q of the loss")
    verification_precision: int = Field(7, description="Rule used for continuous norms and means")

    model_config = {"extra": "forbid"}

    @field_validator("assembly_precision")
    @classmethod
    def validate_assembly(cls, v: int) -> int:
        if v != 3:
            raise ValueError(f"assembly precision must be 3, got {v}")
        return v

    @field_validator("verification_precision")
    @classmethod
    def validate_verification(cls, v: int) -> int:
        if v != 7:
            raise ValueError(f"verification precision must be 7, got {v}")
        return v


class ExperimentConfig(BaseSettings):
    """Main experiment configuration."""

    problem: str = Field("poisson_tanh", description="Registered problem name")
    lift: str = Field("exact", description="Dirichlet lift: exact | transfinite")
    mesh_sizes: List[int] = Field(default_factory=lambda: [4, 8, 16, 32], description="Cells per side")
    trace_mesh: int = Field(8, ge=1, description="Mesh used by the training trace")
    tail_drop: int = Field(1, ge=0, description="Coarsest meshes left out of the slope fit")
    seed: int = Field(0, description="Base seed; mesh i trains with seed + i")
    parallel_meshes: bool = Field(False, description="Train meshes in a process pool")

    network: NetworkConfig = Field(default_factory=NetworkConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)

    output_dir: str = Field("output", description="Output directory for results")

    model_config = {
        "env_prefix": "VPINN_",
        "env_nested_delimiter": "__",
        "extra": "forbid",
        "json_schema_extra": {
            "example": {
                "problem": "poisson_tanh",
                "mesh_sizes": [4, 8, 16, 32],
                "network": {"hidden": [50, 50, 50]},
                "training": {"epochs": 10000},
                "output_dir": "output",
            }
        },
    }

    @field_validator("problem")
    @classmethod
    def validate_problem(cls, v: str) -> str:
        if v not in PROBLEMS:
            raise ValueError(f"unknown problem {v!r}; available: {sorted(PROBLEMS)}")
        return v

    @field_validator("lift")
    @classmethod
    def validate_lift(cls, v: str) -> str:
        if v not in LIFT_MODES:
            raise ValueError(f"unknown lift {v!r}; expected one of {LIFT_MODES}")
        return v

    @field_validator("mesh_sizes")
    @classmethod
    def validate_mesh_sizes(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("mesh_sizes must not be empty")
        if any(n < 1 for n in v):
            raise ValueError("mesh sizes must be >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("mesh_sizes must be strictly increasing")
        return v

    @model_validator(mode="after")
    def validate_tail(self) -> "ExperimentConfig":
        if len(self.mesh_sizes) - self.tail_drop < 1:
            raise ValueError(
                f"tail_drop={self.tail_drop} leaves no mesh of {self.mesh_sizes} for the slope fit"
            )
        return self

    def seed_for_mesh(self, index: int) -> int:
        """Initialization seed of the index-th mesh."""
        return self.seed + index


# ============================================================================
# Loading
# ============================================================================

def _set_dotted(target: Dict[str, Any], key: str, value: Any, line_no: int) -> None:
    parts = key.split(".")
    node = target
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"line {line_no}: {key!r} conflicts with an earlier scalar key")
        node = child
    if parts[-1] in node:
        raise ConfigError(f"line {line_no}: duplicate key {key!r}")
    node[parts[-1]] = value


def parse_flat_config(text: str) -> Dict[str, Any]:
    """
    Parse the flat ``key = value`` format.

    One assignment per line, ``#`` starts a comment, dotted keys address nested
    sections (``training.epochs = 2000``) and values are read as YAML scalars or
    flow lists (``mesh_sizes = [4, 8, 16]``).

    Raises:
        ConfigError: On malformed lines or duplicate keys
    """
    data: Dict[str, Any] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        try:
            parsed = yaml.safe_load(value) if value else None
        except yaml.YAMLError as e:
            raise ConfigError(f"line {line_no}: cannot parse value {value!r}: {e}")
        _set_dotted(data, key, parsed, line_no)
    return data


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        path: YAML file (.yaml/.yml) or flat key = value file; None for defaults
        **overrides: Top-level values applied on top of the file

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: If the file is missing, malformed or fails validation
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            try:
                data = yaml.safe_load(text) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"invalid YAML in {path}: {e}")
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
        else:
            data = parse_flat_config(text)
        logger.info(f"Loaded configuration from {path}")

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}")
