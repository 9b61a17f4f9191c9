from enum import Enum
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from src.config import (
    DEFAULT_INIT_RETRIES,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL_KKT,
    DEFAULT_TOL_STEP,
)
from src.models.diagnostics import RateFit
from src.models.factors import FactorSet


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_SWEEPS = "MaxSweeps"
    ALL_TRUNCATED = "AllTruncated"

    @property
    def exit_code(self) -> int:
        return {"Converged": 0, "MaxSweeps": 2, "AllTruncated": 3}[self.value]


class SolverConfig(BaseModel):
    epsilon: Optional[float] = Field(None, gt=0, description="Proximal parameter; None means 1e-3*||A||")
    kappa: Union[Literal["auto"], float] = Field("auto", description="Truncation parameter or 'auto'")
    max_sweeps: int = Field(DEFAULT_MAX_SWEEPS, ge=1)
    tol_step: float = Field(DEFAULT_TOL_STEP, gt=0)
    tol_kkt: float = Field(DEFAULT_TOL_KKT, gt=0)
    seed: int = Field(0, ge=0)
    init_retries: int = Field(DEFAULT_INIT_RETRIES, ge=1)
    keep_states: bool = Field(False, description="Retain per-sweep states for the subgradient check")

    model_config = {"extra": "forbid"}

    @field_validator("kappa")
    @classmethod
    def validate_kappa(cls, v):
        if v != "auto" and v < 0:
            raise ValueError("kappa must be non-negative or 'auto'")
        return v


class SweepRecord(BaseModel):
    """Observables of one sweep p (objective g(U_[p], lambda_[p]) and friends)"""

    sweep: int = Field(..., ge=1)
    objective: float = Field(..., ge=0.0)
    step_norm: float = Field(..., description="||U_[p] - U_[p-1]||_F over surviving columns")
    joint_step_norm: float = Field(..., description="||(U,lambda)_[p] - (U,lambda)_[p-1]||_F")
    lambda_step_norm: float = 0.0
    kkt_residual: float
    rank_before: int
    rank_after: int
    sigma_min: List[float] = Field(default_factory=list, description="lambda_min(S^(i)) per orthonormal mode")
    proximal_flags: List[float] = Field(default_factory=list, description="alpha per orthonormal mode (0 or epsilon)")
    proximal_count: int = 0
    truncated: List[int] = Field(default_factory=list, description="Columns J_p removed in this sweep")
    truncation_increase: float = 0.0
    zero_contraction: bool = False

    @property
    def is_truncation(self) -> bool:
        return bool(self.truncated)


class ModeWork(BaseModel):
    """Per-mode working data of a sweep: V^(i), lambda^{i-1}, lambda^i and alpha_i"""

    V: np.ndarray
    lam_in: np.ndarray
    lam_out: np.ndarray
    alpha: float = 0.0

    model_config = {"arbitrary_types_allowed": True}


class SweepState(BaseModel):
    sweep: int
    factors: FactorSet
    modes: List[ModeWork]

    model_config = {"arbitrary_types_allowed": True}


class SolveResult(BaseModel):
    factors: FactorSet
    trace: List[SweepRecord]
    status: SolveStatus
    stabilization_sweep: int = 0
    tensor_norm: float
    epsilon: float
    kappa: float
    initial_objective: float
    initial_rank: int
    initial_factors: FactorSet
    states: List[SweepState] = Field(default_factory=list)

    model_config = {"arbitrary_types_allowed": True}

    @property
    def objective(self) -> float:
        return self.trace[-1].objective if self.trace else self.initial_objective

    @property
    def kkt_residual(self) -> Optional[float]:
        return self.trace[-1].kkt_residual if self.trace else None


class SolveReport(BaseModel):
    """Result JSON of a solve run; keys are stable"""

    status: SolveStatus
    sweeps: int
    objective: float
    kkt_residual: Optional[float]
    rank: int
    orth_modes: int
    lam: List[float]
    factor_digests: List[str]
    stabilization_sweep: int
    epsilon: float
    kappa: float
    tensor_norm: float
    initial_objective: float
    initial_rank: int
    rate_fit: Optional[RateFit] = None
    rate_fit_error: Optional[str] = None
