import argparse
from typing import Any, Dict, List, Union

from src.config import DEFAULT_MAX_SWEEPS, DEFAULT_TOL_KKT, DEFAULT_TOL_STEP
from src.models.solver import SolverConfig


def parse_dims(text: str) -> List[int]:
    """'3,3,3' or '3x3x3'"""
    parts = text.replace("x", ",").split(",")
    try:
        dims = [int(p) for p in parts if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid dimensions '{text}'")
    if not dims or any(n < 1 for n in dims):
        raise argparse.ArgumentTypeError(f"dimensions must be positive integers, got '{text}'")
    return dims


def parse_kappa(text: str) -> Union[str, float]:
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"kappa must be 'auto' or a number, got '{text}'")


def add_solver_options(
    parser: argparse.ArgumentParser,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    tol_step: float = DEFAULT_TOL_STEP,
    tol_kkt: float = DEFAULT_TOL_KKT,
) -> None:
    parser.add_argument("--epsilon", type=float, default=None, help="Proximal parameter (default 1e-3*||A||)")
    parser.add_argument("--kappa", type=parse_kappa, default="auto", help="Truncation parameter or 'auto'")
    parser.add_argument("--max-sweeps", type=int, default=max_sweeps)
    parser.add_argument("--tol-step", type=float, default=tol_step)
    parser.add_argument("--tol-kkt", type=float, default=tol_kkt)
    parser.add_argument("--seed", type=int, default=0)


def solver_config(args: argparse.Namespace, **overrides: Any) -> SolverConfig:
    """Build a validated SolverConfig; pydantic.ValidationError propagates to the CLI"""
    values: Dict[str, Any] = {
        "epsilon": args.epsilon,
        "kappa": args.kappa,
        "max_sweeps": args.max_sweeps,
        "tol_step": args.tol_step,
        "tol_kkt": args.tol_kkt,
        "seed": args.seed,
    }
    values.update(overrides)
    return SolverConfig(**values)
