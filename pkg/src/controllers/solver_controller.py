import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from src.config import EPSILON_SCALE
from src.controllers.diagnostics_controller import kkt_residual
from src.controllers.linalg_controller import (
    make_rng,
    polar_decompose,
    random_orthonormal,
    random_unit_columns,
)
from src.controllers.tensor_controller import (
    diag_k,
    difference,
    frobenius,
    mode_matrix,
    multilinear_transform,
    rank1_sum,
)
from src.errors import AllTruncated, InitFailed, InputError, ZeroContraction
from src.models.factors import FactorSet
from src.models.solver import (
    ModeWork,
    SolveResult,
    SolverConfig,
    SolveStatus,
    SweepRecord,
    SweepState,
)
from src.models.tensor import DenseTensor

logger = logging.getLogger(__name__)


class SolverController:
    """iAPD-ALS: alternating polar decompositions on the orthonormal modes,
    proximal correction, truncation and alternating least squares on the rest."""

    @staticmethod
    def check_shapes(A: DenseTensor, U: FactorSet) -> None:
        if U.shape != A.shape:
            raise InputError(f"factor shapes {U.shape} do not match tensor shape {A.shape}")

    @staticmethod
    def objective(A: DenseTensor, U: FactorSet) -> float:
        """g(U, lambda) = 1/2 ||A - sum_j lambda_j u^(1)_j x ... x u^(k)_j||^2"""
        SolverController.check_shapes(A, U)
        return 0.5 * frobenius(difference(A, rank1_sum(U))) ** 2

    @staticmethod
    def optimal_lambda(A: DenseTensor, U: FactorSet) -> np.ndarray:
        """lambda_j = ((U^(1)^T, ..., U^(k)^T) . A)_{j..j}"""
        SolverController.check_shapes(A, U)
        if U.r == 0:
            return np.zeros(0)
        return diag_k(multilinear_transform(A, U.factors))

    @staticmethod
    def resolve_epsilon(cfg: SolverConfig, tensor_norm: float) -> float:
        return cfg.epsilon if cfg.epsilon is not None else EPSILON_SCALE * tensor_norm

    @staticmethod
    def init(
        A: DenseTensor,
        r: int,
        s: int,
        cfg: SolverConfig,
        rng: np.random.Generator,
        start: Optional[FactorSet] = None,
    ) -> Tuple[FactorSet, float]:
        """Feasible U_[0] with 2 g(U_[0], lambda_[0]) < ||A||^2 and the truncation parameter kappa"""
        if r < 1:
            raise InputError(f"rank must be positive, got {r}")
        if not 1 <= s <= A.order:
            raise InputError(f"orthonormal mode count must lie in [1, {A.order}], got {s}")
        if r > min(A.shape):
            raise InputError(f"rank {r} exceeds the smallest dimension {min(A.shape)}")
        norm_sq = frobenius(A) ** 2
        if norm_sq == 0.0:
            raise InputError("the data tensor is zero")

        for attempt in range(cfg.init_retries):
            if start is not None and attempt == 0:
                U = start
            else:
                factors = [
                    random_orthonormal(n, r, rng) if i < s else random_unit_columns(n, r, rng)
                    for i, n in enumerate(A.shape)
                ]
                U = FactorSet(factors=factors, lam=np.zeros(r), s=s)
            U = U.with_lambda(SolverController.optimal_lambda(A, U))
            g0 = SolverController.objective(A, U)
            if 2.0 * g0 < norm_sq:
                break
            logger.info(f"Initial point {attempt + 1} rejected (2g={2.0 * g0:.6e} >= ||A||^2={norm_sq:.6e})")
        else:
            raise InitFailed(f"no admissible initial point after {cfg.init_retries} attempts")

        if cfg.kappa == "auto":
            kappa = 0.5 * math.sqrt((norm_sq - 2.0 * g0) / r)
        else:
            kappa = float(cfg.kappa)
        return U, kappa

    @staticmethod
    def _als_column(v: np.ndarray, lam_prev: float, mode: int, column: int) -> np.ndarray:
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ZeroContraction(mode, column)
        sign = 1.0 if lam_prev >= 0 else -1.0
        return sign * v / norm

    @staticmethod
    def sweep(
        A: DenseTensor,
        state: FactorSet,
        kappa: float,
        cfg: SolverConfig,
        prev: Optional[FactorSet] = None,
        rng: Optional[np.random.Generator] = None,
        index: int = 1,
    ) -> Tuple[FactorSet, SweepRecord, SweepState]:
        """One pass i = 1..k of Algorithm iAPD-ALS starting from `state`.

        `prev` is the proximal anchor U_[p-1] and defaults to `state`.
        """
        anchor = prev if prev is not None else state
        rng = rng if rng is not None else make_rng(cfg.seed + index)
        epsilon = SolverController.resolve_epsilon(cfg, frobenius(A))
        s, k = state.s, state.order

        current: List[np.ndarray] = [F.copy() for F in state.factors]
        kept = np.arange(state.r)
        modes: List[ModeWork] = []
        sigma_min: List[float] = []
        flags: List[float] = []
        truncated: List[int] = []
        increase = 0.0
        zero_contraction = False

        for i in range(k):
            # current holds x^i: modes < i already updated, modes >= i from the previous sweep
            V = mode_matrix(A, current, i)
            lam_in = np.einsum("ij,ij->j", V, current[i])

            if i < s:
                target = V * lam_in
                polar = polar_decompose(target)
                sigma_min.append(polar.sigma_min)
                alpha = 0.0
                if polar.sigma_min < epsilon:
                    polar = polar_decompose(target + epsilon * anchor.factors[i][:, kept])
                    alpha = epsilon
                flags.append(alpha)
                current[i] = polar.Q
                lam_out = np.einsum("ij,ij->j", V, current[i])
                modes.append(ModeWork(V=V, lam_in=lam_in, lam_out=lam_out, alpha=alpha))
            else:
                updated = np.empty_like(current[i])
                for j in range(current[i].shape[1]):
                    try:
                        updated[:, j] = SolverController._als_column(V[:, j], lam_in[j], i, j)
                    except ZeroContraction as e:
                        logger.warning(f"{e.detail}; reinitialising the column")
                        updated[:, j] = random_unit_columns(current[i].shape[0], 1, rng)[:, 0]
                        zero_contraction = True
                current[i] = updated
                lam_out = np.einsum("ij,ij->j", V, current[i])
                modes.append(ModeWork(V=V, lam_in=lam_in, lam_out=lam_out))

            if i == s - 1:
                # (U^(s)^T V^(s))_jj = lambda^s_j; removing column j raises g by lambda_j^2 / 2
                d = lam_out
                drop = np.abs(d) < kappa
                if np.any(drop):
                    truncated = [int(j) for j in np.flatnonzero(drop)]
                    increase = 0.5 * float(np.sum(d[drop] ** 2))
                    keep = np.flatnonzero(~drop)
                    current = [F[:, keep] for F in current]
                    kept = kept[keep]
                    logger.info(f"Sweep {index}: truncated columns {truncated}, rank {len(kept)}")

        rank_before = state.r
        if kept.size == 0:
            empty = FactorSet(factors=current, lam=np.zeros(0), s=s)
            record = SweepRecord(
                sweep=index,
                objective=SolverController.objective(A, empty),
                step_norm=0.0,
                joint_step_norm=0.0,
                kkt_residual=0.0,
                rank_before=rank_before,
                rank_after=0,
                sigma_min=sigma_min,
                proximal_flags=flags,
                proximal_count=sum(1 for a in flags if a > 0),
                truncated=truncated,
                truncation_increase=increase,
                zero_contraction=zero_contraction,
            )
            raise AllTruncated(f"all components truncated at sweep {index}", record=record, state=empty)

        updated_state = FactorSet(factors=current, lam=np.zeros(kept.size), s=s)
        updated_state = updated_state.with_lambda(SolverController.optimal_lambda(A, updated_state))

        step_sq = sum(float(np.sum((F - P[:, kept]) ** 2)) for F, P in zip(current, state.factors))
        lam_step = float(np.linalg.norm(updated_state.lam - state.lam[kept]))
        record = SweepRecord(
            sweep=index,
            objective=SolverController.objective(A, updated_state),
            step_norm=math.sqrt(step_sq),
            joint_step_norm=math.sqrt(step_sq + lam_step**2),
            lambda_step_norm=lam_step,
            kkt_residual=kkt_residual(A, updated_state),
            rank_before=rank_before,
            rank_after=updated_state.r,
            sigma_min=sigma_min,
            proximal_flags=flags,
            proximal_count=sum(1 for a in flags if a > 0),
            truncated=truncated,
            truncation_increase=increase,
            zero_contraction=zero_contraction,
        )
        return updated_state, record, SweepState(sweep=index, factors=updated_state, modes=modes)

    @staticmethod
    def solve(
        A: DenseTensor,
        r: int,
        s: int,
        cfg: SolverConfig,
        start: Optional[FactorSet] = None,
    ) -> SolveResult:
        init_rng, sweep_rng = make_rng(cfg.seed).spawn(2)
        U, kappa = SolverController.init(A, r, s, cfg, init_rng, start=start)
        tensor_norm = frobenius(A)
        epsilon = SolverController.resolve_epsilon(cfg, tensor_norm)
        initial = U
        g0 = SolverController.objective(A, U)
        logger.info(
            f"Solving shape={A.shape} r={r} s={s}: g0={g0:.6e}, epsilon={epsilon:.3e}, kappa={kappa:.3e}"
        )

        trace: List[SweepRecord] = []
        states: List[SweepState] = []
        status = SolveStatus.MAX_SWEEPS
        stabilization = 0
        for p in range(1, cfg.max_sweeps + 1):
            try:
                U, record, sweep_state = SolverController.sweep(A, U, kappa, cfg, rng=sweep_rng, index=p)
            except AllTruncated as e:
                logger.warning(e.detail)
                trace.append(e.record)
                U = e.state
                stabilization = p
                status = SolveStatus.ALL_TRUNCATED
                break
            trace.append(record)
            if cfg.keep_states:
                states.append(sweep_state)
            if record.is_truncation:
                stabilization = p
            logger.debug(
                f"sweep {p}: g={record.objective:.12e} step={record.step_norm:.3e} "
                f"kkt={record.kkt_residual:.3e} rank={record.rank_after}"
            )
            if record.step_norm <= cfg.tol_step and record.kkt_residual <= cfg.tol_kkt:
                status = SolveStatus.CONVERGED
                break

        logger.info(
            f"Finished with status {status.value} after {len(trace)} sweeps: "
            f"g={trace[-1].objective if trace else g0:.6e}, rank={U.r}"
        )
        return SolveResult(
            factors=U,
            trace=trace,
            status=status,
            stabilization_sweep=stabilization,
            tensor_norm=tensor_norm,
            epsilon=epsilon,
            kappa=kappa,
            initial_objective=g0,
            initial_rank=r,
            initial_factors=initial,
            states=states,
        )

    @staticmethod
    def solve_multistart(A: DenseTensor, r: int, s: int, cfg: SolverConfig, restarts: int = 1) -> SolveResult:
        """Independent solves on spawned seeds; returns the lowest final objective"""
        if restarts < 1:
            raise InputError(f"restarts must be positive, got {restarts}")
        if restarts == 1:
            return SolverController.solve(A, r, s, cfg)
        seeds = np.random.SeedSequence(cfg.seed).generate_state(restarts)
        best: Optional[SolveResult] = None
        for attempt, seed in enumerate(seeds):
            result = SolverController.solve(A, r, s, cfg.model_copy(update={"seed": int(seed)}))
            logger.info(f"Restart {attempt + 1}/{restarts}: status={result.status.value}, g={result.objective:.6e}")
            if best is None or result.objective < best.objective:
                best = result
        return best
