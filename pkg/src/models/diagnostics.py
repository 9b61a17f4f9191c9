from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class RateFit(BaseModel):
    q_ratios: List[float] = Field(..., description="(g_p - g_*) / (g_{p-1} - g_*) over the fit window")
    q_tail_median: float = Field(..., ge=0.0)
    r_linear_rho: float = Field(..., description="exp(slope) of the least-squares line on log(g_p - g_*)")
    r_squared: float
    window: Tuple[int, int]
    points: int
    g_star: float
    sublinear: bool


class Violation(BaseModel):
    sweep: int
    lhs: float
    rhs: float


class DecreaseReport(BaseModel):
    passed: bool
    checked: int
    constant: float = Field(..., description="min(epsilon, 2 kappa^2) / 2")
    violations: List[Violation] = Field(default_factory=list)
    joint_ratio_min: Optional[float] = Field(None, description="min (g_p - g_{p+1}) / ||d(U,lambda)||^2, logged only")


class SubgradReport(BaseModel):
    passed: bool
    skipped: bool = False
    checked: int = 0
    constant: float = 0.0
    max_normal_residual: float = 0.0
    normal_violations: List[Violation] = Field(default_factory=list)
    bound_violations: List[Violation] = Field(default_factory=list)


class TruncationReport(BaseModel):
    passed: bool
    initial_rank: int
    total_truncated: int
    stabilization_sweep: int
    late_truncations: List[int] = Field(default_factory=list)
    oversized_jumps: List[Violation] = Field(default_factory=list)


class FeasibilityReport(BaseModel):
    passed: bool
    stiefel_residuals: List[float]
    sphere_residuals: List[float]
    max_residual: float


class DiagnosticsReport(BaseModel):
    passed: bool
    sufficient_decrease: DecreaseReport
    subgrad_bound: SubgradReport
    truncation: TruncationReport
    feasibility: Optional[FeasibilityReport] = None
    rate_fit: Optional[RateFit] = None
    rate_fit_error: Optional[str] = None
    final_kkt_residual: Optional[float] = None
    rerun_objective: Optional[float] = Field(None, description="Final objective of the re-run used for the subgradient check")
