from typing import List, Optional

from pydantic import BaseModel

from src.models.diagnostics import RateFit


class RateRecord(BaseModel):
    seed: int
    status: str
    sweeps: int
    final_objective: float
    stabilization_sweep: int
    rate_fit: Optional[RateFit] = None
    rate_fit_error: Optional[str] = None
    truncation_ok: bool
    passed: bool


class RateSummary(BaseModel):
    dims: List[int]
    rank: int
    orth_modes: int
    records: List[RateRecord]
    passing: int
    passed: bool


class DecreaseRecord(BaseModel):
    seed: int
    sweeps: int
    decrease_violations: int
    normal_violations: int
    bound_violations: int
    max_normal_residual: float
    truncation_ok: bool
    passed: bool


class DecreaseSummary(BaseModel):
    dims: List[int]
    rank: int
    orth_modes: int
    records: List[DecreaseRecord]
    passed: bool


class RecoveryRecord(BaseModel):
    seed: int
    status: str
    relative_objective: float
    kkt_residual: Optional[float]
    recovered: bool


class RecoverySummary(BaseModel):
    dims: List[int]
    rank: int
    orth_modes: int
    restarts: int
    records: List[RecoveryRecord]
    recovered: int
    passed: bool
