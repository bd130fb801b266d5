"""
Record models for vpinn-estimator.

Records that are logged, exported or compared across runs use Pydantic for
validation and serialization. Numeric containers holding arrays live next to
the code that produces them.
"""

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

ChMode = Literal["measured", "asymptotic"]


def _finite_nonnegative(v: float) -> float:
    if not math.isfinite(v) or v < 0.0:
        raise ValueError(f"value must be finite and nonnegative, got {v!r}")
    return v


# ============================================================================
# Test-space constants
# ============================================================================

class NormEquivConstants(BaseModel):
    """Constants of c_h |v_h|_1 <= ||v||_2 <= C_h |v_h|_1 on V_h."""

    c_h: float = Field(..., gt=0.0, description="Lower constant")
    C_h: float = Field(..., gt=0.0, description="Upper constant")
    mode: ChMode = Field("measured", description="How the constants were obtained")

    model_config = {
        "json_schema_extra": {
            "example": {"c_h": 0.5, "C_h": 0.5, "mode": "measured"}
        }
    }

    @model_validator(mode="after")
    def validate_order(self) -> "NormEquivConstants":
        if self.c_h > self.C_h * (1.0 + 1e-12):
            raise ValueError(f"c_h ({self.c_h}) must not exceed C_h ({self.C_h})")
        return self


# ============================================================================
# Training trace
# ============================================================================

class TraceRecord(BaseModel):
    """One checkpoint of a training run."""

    epoch: int = Field(..., ge=0, description="Optimizer step at which the record was taken")
    R_h: float = Field(..., description="Square root of the loss")
    eta_rhs: float
    eta_coef: float
    eta_res: float
    eta_loss: float
    eta: float = Field(..., description="eta_res + eta_loss + eta_coef + eta_rhs")
    h1_error: Optional[float] = Field(None, description="|u - u_NN|_1 when the exact solution is known")

    @field_validator("R_h", "eta_rhs", "eta_coef", "eta_res", "eta_loss", "eta")
    @classmethod
    def validate_values(cls, v: float) -> float:
        return _finite_nonnegative(v)

    @field_validator("h1_error")
    @classmethod
    def validate_error(cls, v: Optional[float]) -> Optional[float]:
        return None if v is None else _finite_nonnegative(v)


TRACE_COLUMNS = ["epoch", "R_h", "eta_rhs", "eta_coef", "eta_res", "eta_loss", "eta", "h1_error"]


class TrainingTrace(BaseModel):
    """Checkpoint records of one run, epochs strictly increasing."""

    mesh: str = Field(..., description="Mesh fingerprint")
    records: List[TraceRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = Field(None, description="Epoch of the returned (best) parameters")
    best_R_h: Optional[float] = None
    initial_R_h: Optional[float] = None
    stopped_early: bool = False

    @field_validator("records")
    @classmethod
    def validate_increasing(cls, records: List[TraceRecord]) -> List[TraceRecord]:
        epochs = [r.epoch for r in records]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("trace epochs must be strictly increasing")
        return records

    def append(self, record: TraceRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError("trace epochs must be strictly increasing")
        self.records.append(record)

    def rows(self) -> List[Dict[str, Optional[float]]]:
        return [r.model_dump() for r in self.records]


# ============================================================================
# Convergence study
# ============================================================================

class ConvergenceRow(BaseModel):
    """Result of training and estimating on one mesh."""

    n: int = Field(..., ge=1, description="Cells per side of the structured mesh")
    h: float = Field(..., gt=0.0)
    num_interior: int = Field(..., ge=0, description="|I_h|")
    R_h: float
    eta_res: float
    eta_loss: float
    eta_coef: float
    eta_rhs: float
    eta: float
    eta_local: float = Field(..., description="(sum_E eta(E)^2)^(1/2)")
    h1_error: float
    efficiency_index: Optional[float] = Field(None, description="eta / h1_error; None when the error vanishes")
    reliability_ratio: Optional[float] = Field(None, description="h1_error / eta_local")

    model_config = {
        "json_schema_extra": {
            "example": {
                "n": 8, "h": 0.1767766952966369, "num_interior": 49, "R_h": 1.2e-5,
                "eta_res": 0.02, "eta_loss": 1.1e-4, "eta_coef": 0.004, "eta_rhs": 0.003,
                "eta": 0.027, "eta_local": 0.021, "h1_error": 0.004,
                "efficiency_index": 6.7, "reliability_ratio": 0.19,
            }
        }
    }

    @field_validator(
        "R_h", "eta_res", "eta_loss", "eta_coef", "eta_rhs", "eta", "eta_local", "h1_error",
    )
    @classmethod
    def validate_values(cls, v: float) -> float:
        return _finite_nonnegative(v)

    @field_validator("efficiency_index", "reliability_ratio")
    @classmethod
    def validate_ratios(cls, v: Optional[float]) -> Optional[float]:
        return None if v is None else _finite_nonnegative(v)


CONVERGENCE_COLUMNS = list(ConvergenceRow.model_fields)


class ConvergenceResult(BaseModel):
    """All rows of a convergence study plus the fitted log-log slopes."""

    problem: str
    rows: List[ConvergenceRow] = Field(default_factory=list)
    slopes: Dict[str, float] = Field(default_factory=dict)
    tail_drop: int = 1
    reliability_constant: Optional[float] = Field(
        None, description="max over meshes of h1_error / eta_local"
    )


# ============================================================================
# Self-test
# ============================================================================

class CheckResult(BaseModel):
    """Outcome of one self-test check."""

    name: str
    passed: bool
    detail: str = ""
    seconds: float = Field(0.0, ge=0.0)


__all__ = [
    "ChMode",
    "NormEquivConstants",
    "TraceRecord",
    "TRACE_COLUMNS",
    "TrainingTrace",
    "ConvergenceRow",
    "CONVERGENCE_COLUMNS",
    "ConvergenceResult",
    "CheckResult",
]
