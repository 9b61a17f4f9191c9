import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import Callable, List, Optional, Sequence, TypeVar

from src.config import get_thread_cap
from src.controllers import nlslab_controller
from src.controllers.diagnostics_controller import (
    check_subgrad_bound,
    check_sufficient_decrease,
    check_truncation,
    rate_fit,
)
from src.controllers.generator_controller import GeneratorController
from src.controllers.linalg_controller import make_rng
from src.controllers.solver_controller import SolverController
from src.controllers.tensor_controller import frobenius
from src.errors import WindowTooShort
from src.models.experiments import (
    DecreaseRecord,
    DecreaseSummary,
    RateRecord,
    RateSummary,
    RecoveryRecord,
    RecoverySummary,
)
from src.models.nlslab import LocationSummary
from src.models.solver import SolverConfig

logger = logging.getLogger(__name__)

T = TypeVar("T")

RATE_Q_MAX = 0.999
RATE_R2_MIN = 0.95
RECOVERY_REL_OBJECTIVE = 1e-16
RECOVERY_KKT = 1e-10
RECOVERY_PASS_FRACTION = 0.8


def rate_job(seed: int, dims: Sequence[int], rank: int, orth_modes: int, cfg: SolverConfig) -> RateRecord:
    """Solve one Gaussian tensor and fit the convergence rate of its trace"""
    data_rng = make_rng(seed).spawn(1)[0]
    A = GeneratorController.gaussian_tensor(dims, data_rng)
    result = SolverController.solve(A, rank, orth_modes, cfg.model_copy(update={"seed": seed}))
    truncation = check_truncation(result.trace, result.kappa, result.initial_rank, result.stabilization_sweep)
    fit, fit_error = None, None
    try:
        fit = rate_fit(result.trace, result.tensor_norm, result.stabilization_sweep)
    except WindowTooShort as e:
        fit_error = e.detail
    passed = (
        fit is not None
        and fit.q_tail_median <= RATE_Q_MAX
        and fit.r_squared >= RATE_R2_MIN
        and truncation.passed
    )
    return RateRecord(
        seed=seed,
        status=result.status.value,
        sweeps=len(result.trace),
        final_objective=result.objective,
        stabilization_sweep=result.stabilization_sweep,
        rate_fit=fit,
        rate_fit_error=fit_error,
        truncation_ok=truncation.passed,
        passed=passed,
    )


def decrease_job(seed: int, dims: Sequence[int], rank: int, orth_modes: int, cfg: SolverConfig) -> DecreaseRecord:
    """Solve with retained states and check the per-sweep inequalities"""
    data_rng = make_rng(seed).spawn(1)[0]
    A = GeneratorController.gaussian_tensor(dims, data_rng)
    result = SolverController.solve(A, rank, orth_modes, cfg.model_copy(update={"seed": seed, "keep_states": True}))
    decrease = check_sufficient_decrease(
        result.trace,
        result.epsilon,
        result.kappa,
        result.tensor_norm,
        result.stabilization_sweep,
        result.initial_objective,
    )
    subgrad = check_subgrad_bound(A, result)
    truncation = check_truncation(result.trace, result.kappa, result.initial_rank, result.stabilization_sweep)
    return DecreaseRecord(
        seed=seed,
        sweeps=len(result.trace),
        decrease_violations=len(decrease.violations),
        normal_violations=len(subgrad.normal_violations),
        bound_violations=len(subgrad.bound_violations),
        max_normal_residual=subgrad.max_normal_residual,
        truncation_ok=truncation.passed,
        passed=decrease.passed and subgrad.passed and truncation.passed,
    )


def recovery_job(
    seed: int,
    dims: Sequence[int],
    rank: int,
    orth_modes: int,
    restarts: int,
    noise: float,
    cfg: SolverConfig,
) -> RecoveryRecord:
    """Plant a decomposition, solve from several starts and check it is found"""
    data_rng = make_rng(seed).spawn(1)[0]
    A, _ = GeneratorController.planted_tensor(dims, rank, orth_modes, noise, data_rng, seed=seed)
    result = SolverController.solve_multistart(A, rank, orth_modes, cfg.model_copy(update={"seed": seed}), restarts)
    relative = result.objective / frobenius(A) ** 2
    kkt = result.kkt_residual
    recovered = relative <= RECOVERY_REL_OBJECTIVE and kkt is not None and kkt <= RECOVERY_KKT
    return RecoveryRecord(
        seed=seed,
        status=result.status.value,
        relative_objective=relative,
        kkt_residual=kkt,
        recovered=recovered,
    )


class ExperimentRunner:
    """Fans independent runs out to a thread pool; results come back in submission order"""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or get_thread_cap()
        self.executor: Optional[ThreadPoolExecutor] = None

    async def __aenter__(self):
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        if self.executor:
            self.executor.shutdown(wait=True)
            self.executor = None

    async def map(self, fn: Callable[..., T], items: Sequence) -> List[T]:
        if self.executor is None:
            raise RuntimeError("ExperimentRunner must be used as an async context manager")
        loop = asyncio.get_running_loop()
        futures = [loop.run_in_executor(self.executor, fn, item) for item in items]
        return list(await asyncio.gather(*futures))

    async def location(
        self,
        kind: str,
        num_b: int,
        starts: int,
        seed: int,
        targets=None,
        initial_points=None,
        threshold: float = nlslab_controller.DEDUP_TOL,
    ) -> LocationSummary:
        logger.info(f"Location experiment: kind={kind}, num_b={num_b}, starts={starts}, seed={seed}")
        plan = nlslab_controller.plan_location(kind, num_b, make_rng(seed), targets)

        def job(item):
            b, child = item
            return nlslab_controller.evaluate_target(kind, b, starts, child, initial_points, threshold)

        outcomes = await self.map(job, plan)
        summary = nlslab_controller.summarize_location(kind, outcomes, starts, threshold, seed)
        logger.info(f"Location experiment finished: {summary.violations} violations over {num_b} targets")
        return summary

    async def rate(self, dims: Sequence[int], rank: int, orth_modes: int, seeds: Sequence[int], cfg: SolverConfig) -> RateSummary:
        logger.info(f"Rate experiment: dims={list(dims)}, r={rank}, s={orth_modes}, {len(seeds)} seeds")
        records = await self.map(partial(rate_job, dims=dims, rank=rank, orth_modes=orth_modes, cfg=cfg), seeds)
        passing = sum(1 for record in records if record.passed)
        for record in records:
            if not record.passed:
                logger.warning(f"Rate run seed={record.seed} failed ({record.rate_fit_error or record.status})")
        return RateSummary(
            dims=list(dims),
            rank=rank,
            orth_modes=orth_modes,
            records=records,
            passing=passing,
            passed=passing >= len(records) - 1,
        )

    async def decrease(
        self, dims: Sequence[int], rank: int, orth_modes: int, seeds: Sequence[int], cfg: SolverConfig
    ) -> DecreaseSummary:
        logger.info(f"Decrease experiment: dims={list(dims)}, r={rank}, s={orth_modes}, {len(seeds)} seeds")
        records = await self.map(partial(decrease_job, dims=dims, rank=rank, orth_modes=orth_modes, cfg=cfg), seeds)
        return DecreaseSummary(
            dims=list(dims),
            rank=rank,
            orth_modes=orth_modes,
            records=records,
            passed=all(record.passed for record in records),
        )

    async def recovery(
        self,
        dims: Sequence[int],
        rank: int,
        orth_modes: int,
        seeds: Sequence[int],
        restarts: int,
        cfg: SolverConfig,
        noise: float = 0.0,
    ) -> RecoverySummary:
        logger.info(f"Recovery experiment: dims={list(dims)}, r={rank}, s={orth_modes}, {len(seeds)} seeds")
        job = partial(
            recovery_job, dims=dims, rank=rank, orth_modes=orth_modes, restarts=restarts, noise=noise, cfg=cfg
        )
        records = await self.map(job, seeds)
        recovered = sum(1 for record in records if record.recovered)
        return RecoverySummary(
            dims=list(dims),
            rank=rank,
            orth_modes=orth_modes,
            restarts=restarts,
            records=records,
            recovered=recovered,
            passed=recovered >= RECOVERY_PASS_FRACTION * len(records),
        )
