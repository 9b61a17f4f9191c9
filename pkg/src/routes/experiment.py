import argparse
import asyncio
import logging

from src.controllers import nlslab_controller
from src.errors import InputError
from src.experiments.runner import ExperimentRunner
from src.routes.args import add_solver_options, parse_dims, solver_config
from src.storage.artifacts import atomic_write_text, format_histogram_csv, write_json

logger = logging.getLogger(__name__)

CHECKS_FAILED = 4
DEFAULT_STARTS = {"hyperboloid": 200, "lu": 500}


def register(subparsers) -> None:
    parser = subparsers.add_parser("experiment", help="Run an acceptance experiment")
    kinds = parser.add_subparsers(dest="experiment", required=True)

    location = kinds.add_parser("location", help="Critical-point location on the closed-form NLS examples")
    location.add_argument("--kind", choices=sorted(nlslab_controller.MODELS), required=True)
    location.add_argument("--num-b", type=int, default=100)
    location.add_argument("--starts", type=int, default=None, help="Newton starts per target (200 hyperboloid, 500 lu)")
    location.add_argument("--seed", type=int, default=0)
    location.add_argument("--threshold", type=float, default=nlslab_controller.DEDUP_TOL)
    location.add_argument("--csv", default=None, help="Write the histogram of per-target minima here")
    location.set_defaults(handler=handle_location)

    rate = kinds.add_parser("rate", help="Linear-rate fits over Gaussian tensors")
    _add_sweep_experiment(rate, dims=[3, 3, 3, 3], rank=2, orth_modes=1, seeds=10, tol_step=1e-12)
    rate.set_defaults(handler=handle_rate)

    decrease = kinds.add_parser("decrease", help="Sufficient decrease and subgradient bound over Gaussian tensors")
    _add_sweep_experiment(decrease, dims=[4, 4, 4, 4], rank=2, orth_modes=1, seeds=20, max_sweeps=500)
    decrease.set_defaults(handler=handle_decrease)

    recovery = kinds.add_parser("recovery", help="Recover planted decompositions")
    _add_sweep_experiment(recovery, dims=[6, 6, 6], rank=2, orth_modes=1, seeds=10, tol_step=1e-12, tol_kkt=1e-11)
    recovery.add_argument("--restarts", type=int, default=3)
    recovery.add_argument("--noise", type=float, default=0.0)
    recovery.set_defaults(handler=handle_recovery)

    for sub in (location, rate, decrease, recovery):
        sub.add_argument("--out", default=None, help="Write the summary JSON here")


def _add_sweep_experiment(parser, dims, rank, orth_modes, seeds, **solver_defaults) -> None:
    parser.add_argument("--dims", type=parse_dims, default=dims)
    parser.add_argument("--rank", type=int, default=rank)
    parser.add_argument("--orth-modes", type=int, default=orth_modes)
    parser.add_argument("--seeds", type=int, default=seeds, help="Number of seeds, starting at --seed")
    add_solver_options(parser, **solver_defaults)


def _seeds(args: argparse.Namespace):
    if args.seeds < 1:
        raise InputError(f"--seeds must be positive, got {args.seeds}")
    if args.seed < 0:
        raise InputError(f"--seed must be non-negative, got {args.seed}")
    return list(range(args.seed, args.seed + args.seeds))


def _emit(args: argparse.Namespace, summary, passed: bool) -> int:
    if args.out:
        write_json(args.out, summary)
    print(summary.model_dump_json(indent=2))
    return 0 if passed else CHECKS_FAILED


def handle_location(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise InputError(f"--seed must be non-negative, got {args.seed}")
    starts = DEFAULT_STARTS[args.kind] if args.starts is None else args.starts

    async def run():
        async with ExperimentRunner() as runner:
            return await runner.location(args.kind, args.num_b, starts, args.seed, threshold=args.threshold)

    summary = asyncio.run(run())
    if args.csv:
        atomic_write_text(args.csv, format_histogram_csv(summary.minima))
    return _emit(args, summary, summary.violations == 0)


def handle_rate(args: argparse.Namespace) -> int:
    cfg = solver_config(args)
    seeds = _seeds(args)

    async def run():
        async with ExperimentRunner() as runner:
            return await runner.rate(args.dims, args.rank, args.orth_modes, seeds, cfg)

    summary = asyncio.run(run())
    return _emit(args, summary, summary.passed)


def handle_decrease(args: argparse.Namespace) -> int:
    cfg = solver_config(args)
    seeds = _seeds(args)

    async def run():
        async with ExperimentRunner() as runner:
            return await runner.decrease(args.dims, args.rank, args.orth_modes, seeds, cfg)

    summary = asyncio.run(run())
    return _emit(args, summary, summary.passed)


def handle_recovery(args: argparse.Namespace) -> int:
    cfg = solver_config(args)
    seeds = _seeds(args)

    async def run():
        async with ExperimentRunner() as runner:
            return await runner.recovery(args.dims, args.rank, args.orth_modes, seeds, args.restarts, cfg, args.noise)

    summary = asyncio.run(run())
    return _emit(args, summary, summary.passed)
