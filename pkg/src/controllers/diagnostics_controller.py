"""First-order diagnostics and empirical checks of the convergence inequalities."""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.controllers.linalg_controller import sphere_residual, stiefel_residual, sym
from src.controllers.tensor_controller import diag_k, mode_matrix, multilinear_transform
from src.errors import WindowTooShort
from src.models.diagnostics import (
    DecreaseReport,
    DiagnosticsReport,
    FeasibilityReport,
    RateFit,
    SubgradReport,
    TruncationReport,
    Violation,
)
from src.models.factors import FactorSet
from src.models.solver import SolveResult, SweepRecord
from src.models.tensor import DenseTensor

logger = logging.getLogger(__name__)

DECREASE_SLACK = 1e-10
SUBGRAD_SLACK = 1e-8
NORMAL_TOL = 1e-8
TRUNCATION_SLACK = 1e-10
SUBLINEAR_Q = 0.999
MIN_WINDOW = 10
MIN_SWEEPS = 30


def gradient(A: DenseTensor, U: FactorSet) -> Tuple[List[np.ndarray], np.ndarray]:
    """Blocks of d psi(U, lambda)^* (psi(U, lambda) - A).

    G^(i) = -V^(i) Gamma + U^(i) Gamma^2 with V^(i) evaluated at the current
    point, and g_lambda = lambda - Diag_k((U^(1)^T, ..., U^(k)^T) . A).
    """
    lam = U.lam
    blocks = []
    for i, F in enumerate(U.factors):
        V = mode_matrix(A, U.factors, i)
        blocks.append(-V * lam + F * lam**2)
    g_lambda = lam - diag_k(multilinear_transform(A, U.factors))
    return blocks, g_lambda


def project_tangent(U: FactorSet, blocks: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Remove the normal-space component of each factor block"""
    projected = []
    for i, (F, G) in enumerate(zip(U.factors, blocks)):
        if i < U.s:
            projected.append(G - F @ sym(F.T @ G))
        else:
            projected.append(G - F * np.einsum("ij,ij->j", F, G))
    return projected


def kkt_residual(A: DenseTensor, U: FactorSet) -> float:
    blocks, g_lambda = gradient(A, U)
    tangent = project_tangent(U, blocks)
    total = sum(float(np.sum(T**2)) for T in tangent) + float(g_lambda @ g_lambda)
    return math.sqrt(total)


def check_feasibility(U: FactorSet, tol: float = 1e-8) -> FeasibilityReport:
    stiefel = [stiefel_residual(F) for F in U.factors[: U.s]]
    sphere = [sphere_residual(F) for F in U.factors[U.s :]]
    worst = max(stiefel + sphere, default=0.0)
    return FeasibilityReport(
        passed=worst <= tol,
        stiefel_residuals=stiefel,
        sphere_residuals=sphere,
        max_residual=worst,
    )


def check_sufficient_decrease(
    trace: Sequence[SweepRecord],
    epsilon: float,
    kappa: float,
    tensor_norm: float,
    stabilization_sweep: int = 0,
    initial_objective: Optional[float] = None,
) -> DecreaseReport:
    """g_{p-1} - g_p + 1e-10 ||A||^2 >= min(eps, 2 kappa^2)/2 * ||U_[p-1] - U_[p]||_F^2

    Checked on every non-truncation sweep after stabilization; sweeps that
    reinitialised a column after a zero contraction are exempt.
    """
    constant = min(epsilon, 2.0 * kappa**2) / 2.0
    slack = DECREASE_SLACK * tensor_norm**2
    violations: List[Violation] = []
    ratios: List[float] = []
    checked = 0

    previous = initial_objective
    for record in trace:
        g_prev, previous = previous, record.objective
        if g_prev is None or record.sweep <= stabilization_sweep:
            continue
        if record.is_truncation or record.zero_contraction:
            continue
        checked += 1
        decrease = g_prev - record.objective
        lhs = decrease + slack
        rhs = constant * record.step_norm**2
        if lhs < rhs:
            violations.append(Violation(sweep=record.sweep, lhs=lhs, rhs=rhs))
        if record.joint_step_norm > 0:
            ratios.append(decrease / record.joint_step_norm**2)

    if violations:
        logger.warning(f"Sufficient decrease violated on {len(violations)} of {checked} sweeps")
    return DecreaseReport(
        passed=not violations,
        checked=checked,
        constant=constant,
        violations=violations,
        joint_ratio_min=min(ratios) if ratios else None,
    )


def _normal_residual(F: np.ndarray, W: np.ndarray, stiefel: bool) -> float:
    if stiefel:
        return float(np.linalg.norm(W - F @ sym(F.T @ W)))
    return float(np.linalg.norm(W - F * np.einsum("ij,ij->j", F, W)))


def check_subgrad_bound(A: DenseTensor, result: SolveResult, epsilon: Optional[float] = None) -> SubgradReport:
    """Build W_[p+1] from the retained sweep data and check normal-space
    membership and ||d psi^*(psi - A) - (W, 0)||_F <= 2 sqrt(k)(2 r sqrt(k) ||A||^2 + eps) ||U_[p+1] - U_[p]||_F.
    """
    if not result.states:
        logger.warning("No retained sweep states; subgradient bound skipped")
        return SubgradReport(passed=True, skipped=True)

    eps = result.epsilon if epsilon is None else epsilon
    k = A.order
    a_norm_sq = result.tensor_norm**2
    normal_violations: List[Violation] = []
    bound_violations: List[Violation] = []
    max_normal = 0.0
    checked = 0
    constant = 0.0

    anchor = result.initial_factors
    for state, record in zip(result.states, result.trace):
        previous, anchor = anchor, state.factors
        if record.is_truncation or record.zero_contraction:
            continue
        U = state.factors
        lam = U.lam
        r = U.r
        checked += 1

        W_blocks = []
        normal_sq = 0.0
        for i, (F, work) in enumerate(zip(U.factors, state.modes)):
            if i < U.s:
                W = F * lam**2 - work.V * work.lam_in - work.alpha * (previous.factors[i] - F)
            else:
                W = F * lam**2 - work.V * work.lam_out
            W_blocks.append(W)
            normal_sq += _normal_residual(F, W, stiefel=i < U.s) ** 2
        normal = math.sqrt(normal_sq)
        max_normal = max(max_normal, normal)
        if normal > NORMAL_TOL:
            normal_violations.append(Violation(sweep=record.sweep, lhs=normal, rhs=NORMAL_TOL))

        blocks, g_lambda = gradient(A, U)
        lhs = math.sqrt(
            sum(float(np.sum((G - W) ** 2)) for G, W in zip(blocks, W_blocks)) + float(g_lambda @ g_lambda)
        )
        step = math.sqrt(sum(float(np.sum((F - P) ** 2)) for F, P in zip(U.factors, previous.factors)))
        constant = 2.0 * math.sqrt(k) * (2.0 * r * math.sqrt(k) * a_norm_sq + eps)
        rhs = constant * step + SUBGRAD_SLACK
        if lhs > rhs:
            bound_violations.append(Violation(sweep=record.sweep, lhs=lhs, rhs=rhs))

    passed = not normal_violations and not bound_violations
    if not passed:
        logger.warning(
            f"Subgradient check: {len(normal_violations)} normal-space and "
            f"{len(bound_violations)} bound violations over {checked} sweeps"
        )
    return SubgradReport(
        passed=passed,
        checked=checked,
        constant=constant,
        max_normal_residual=max_normal,
        normal_violations=normal_violations,
        bound_violations=bound_violations,
    )


def check_truncation(
    trace: Sequence[SweepRecord],
    kappa: float,
    initial_rank: int,
    stabilization_sweep: int,
) -> TruncationReport:
    total = sum(len(record.truncated) for record in trace)
    late = [record.sweep for record in trace if record.is_truncation and record.sweep > stabilization_sweep]
    jumps = []
    for record in trace:
        if not record.is_truncation:
            continue
        bound = len(record.truncated) * kappa**2 + TRUNCATION_SLACK
        if record.truncation_increase > bound:
            jumps.append(Violation(sweep=record.sweep, lhs=record.truncation_increase, rhs=bound))
    return TruncationReport(
        passed=total <= initial_rank and not late and not jumps,
        initial_rank=initial_rank,
        total_truncated=total,
        stabilization_sweep=stabilization_sweep,
        late_truncations=late,
        oversized_jumps=jumps,
    )


def rate_fit(trace: Sequence[SweepRecord], tensor_norm: float, stabilization_sweep: int = 0) -> RateFit:
    """Fit Q- and R-linear rates to g_p - g_*, with g_* the trace minimum.

    The window keeps sweeps whose gap lies in
    (1e3 * machine_eps * ||A||^2, 1e-2 * (g_first - g_*)).
    """
    records = [record for record in trace if record.sweep > stabilization_sweep]
    if len(records) < MIN_SWEEPS:
        raise WindowTooShort(f"only {len(records)} sweeps after stabilization")
    sweeps = np.array([record.sweep for record in records], dtype=np.float64)
    g = np.array([record.objective for record in records])
    g_star = float(g.min())
    gap = g - g_star
    floor = 1e3 * np.finfo(np.float64).eps * tensor_norm**2
    ceiling = 1e-2 * (g[0] - g_star)
    usable = (gap > floor) & (gap < ceiling)
    idx = np.flatnonzero(usable)
    if idx.size < MIN_WINDOW:
        raise WindowTooShort(f"only {idx.size} usable points in the fit window")

    ratio_idx = idx[(idx > 0) & (gap[np.maximum(idx - 1, 0)] > floor)]
    q_ratios = gap[ratio_idx] / gap[ratio_idx - 1]
    tail = q_ratios[q_ratios.size // 2 :]
    q_tail_median = float(np.median(tail)) if tail.size else float("nan")

    fit = stats.linregress(sweeps[idx], np.log(gap[idx]))
    fit_result = RateFit(
        q_ratios=[float(q) for q in q_ratios],
        q_tail_median=q_tail_median,
        r_linear_rho=float(np.exp(fit.slope)),
        r_squared=float(fit.rvalue**2),
        window=(int(sweeps[idx[0]]), int(sweeps[idx[-1]])),
        points=int(idx.size),
        g_star=g_star,
        sublinear=bool(q_tail_median > SUBLINEAR_Q),
    )
    if fit_result.sublinear:
        logger.warning(f"Objective gap decays sublinearly (q_tail_median={q_tail_median:.6f})")
    return fit_result


def run_diagnostics(
    result: SolveResult,
    A: Optional[DenseTensor] = None,
) -> DiagnosticsReport:
    """Bundle every check for one solve; the subgradient bound needs A and retained states."""
    decrease = check_sufficient_decrease(
        result.trace,
        result.epsilon,
        result.kappa,
        result.tensor_norm,
        result.stabilization_sweep,
        result.initial_objective,
    )
    if A is not None:
        subgrad = check_subgrad_bound(A, result)
    else:
        subgrad = SubgradReport(passed=True, skipped=True)
    truncation = check_truncation(result.trace, result.kappa, result.initial_rank, result.stabilization_sweep)
    fit, fit_error = None, None
    try:
        fit = rate_fit(result.trace, result.tensor_norm, result.stabilization_sweep)
    except WindowTooShort as e:
        fit_error = e.detail
    feasibility = check_feasibility(result.factors)
    return DiagnosticsReport(
        passed=decrease.passed and subgrad.passed and truncation.passed and feasibility.passed,
        sufficient_decrease=decrease,
        subgrad_bound=subgrad,
        truncation=truncation,
        feasibility=feasibility,
        rate_fit=fit,
        rate_fit_error=fit_error,
        final_kkt_residual=result.kkt_residual,
    )
