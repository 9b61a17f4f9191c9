import argparse
import logging
from pathlib import Path

from src.controllers.diagnostics_controller import rate_fit
from src.controllers.solver_controller import SolverController
from src.errors import WindowTooShort
from src.models.manifest import RunManifest
from src.models.solver import SolveReport, SolveResult
from src.routes.args import add_solver_options, solver_config
from src.storage.artifacts import factor_digest, sha256_file, write_json, write_trace_csv
from src.storage.dtf import read_dtf

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
RESULT_FILE = "result.json"
MANIFEST_FILE = "manifest.json"


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="Run iAPD-ALS on a .dtf tensor")
    parser.add_argument("input", help="Input .dtf file")
    parser.add_argument("--rank", type=int, required=True)
    parser.add_argument("--orth-modes", type=int, default=1, help="Number s of orthonormal modes")
    add_solver_options(parser)
    parser.add_argument("--restarts", type=int, default=1, help="Independent starts; the best objective wins")
    parser.add_argument("--trace", default=None, help="Write the per-sweep trace CSV here")
    parser.add_argument("--out-dir", default=None, help="Write trace.csv, result.json and manifest.json here")
    parser.set_defaults(handler=handle)


def build_report(result: SolveResult) -> SolveReport:
    fit, fit_error = None, None
    try:
        fit = rate_fit(result.trace, result.tensor_norm, result.stabilization_sweep)
    except WindowTooShort as e:
        fit_error = e.detail
    return SolveReport(
        status=result.status,
        sweeps=len(result.trace),
        objective=result.objective,
        kkt_residual=result.kkt_residual if result.factors.r > 0 else None,
        rank=result.factors.r,
        orth_modes=result.factors.s,
        lam=result.factors.lam.tolist(),
        factor_digests=[factor_digest(F) for F in result.factors.factors],
        stabilization_sweep=result.stabilization_sweep,
        epsilon=result.epsilon,
        kappa=result.kappa,
        tensor_norm=result.tensor_norm,
        initial_objective=result.initial_objective,
        initial_rank=result.initial_rank,
        rate_fit=fit,
        rate_fit_error=fit_error,
    )


def handle(args: argparse.Namespace) -> int:
    cfg = solver_config(args)
    tensor = read_dtf(args.input)
    result = SolverController.solve_multistart(tensor, args.rank, args.orth_modes, cfg, args.restarts)
    report = build_report(result)
    s = args.orth_modes

    if args.trace:
        write_trace_csv(args.trace, result.trace, s)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        trace_path = write_trace_csv(out_dir / TRACE_FILE, result.trace, s)
        result_path = write_json(out_dir / RESULT_FILE, report)
        manifest = RunManifest(
            config=cfg.model_dump(mode="json"),
            input_path=str(Path(args.input).resolve()),
            input_digest=sha256_file(args.input),
            rank=args.rank,
            orth_modes=s,
            restarts=args.restarts,
            seed=cfg.seed,
            outputs={"trace": trace_path.name, "result": result_path.name},
        )
        write_json(out_dir / MANIFEST_FILE, manifest)
        logger.info(f"Wrote run artifacts to {out_dir}")

    print(report.model_dump_json(indent=2))
    return report.status.exit_code
