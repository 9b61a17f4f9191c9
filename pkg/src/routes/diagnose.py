import argparse
import logging
from pathlib import Path

from src.controllers.diagnostics_controller import (
    check_feasibility,
    check_subgrad_bound,
    check_sufficient_decrease,
    check_truncation,
    rate_fit,
)
from src.controllers.solver_controller import SolverController
from src.errors import InputError, WindowTooShort
from src.models.diagnostics import DiagnosticsReport, SubgradReport
from src.models.manifest import RunManifest
from src.models.solver import SolveReport, SolverConfig
from src.routes.solve import MANIFEST_FILE, RESULT_FILE, TRACE_FILE
from src.storage.artifacts import read_json, read_trace_csv, verify_digest, write_json
from src.storage.dtf import read_dtf

logger = logging.getLogger(__name__)

CHECKS_FAILED = 4


def register(subparsers) -> None:
    parser = subparsers.add_parser("diagnose", help="Check the convergence inequalities on a solve run directory")
    parser.add_argument("run_dir", help="Directory written by 'solve --out-dir'")
    parser.add_argument("--out", default=None, help="Also write the diagnostics JSON here")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise InputError(f"run directory {run_dir} does not exist")
    report = read_json(run_dir / RESULT_FILE, SolveReport)
    manifest = read_json(run_dir / MANIFEST_FILE, RunManifest)
    trace = read_trace_csv(run_dir / TRACE_FILE)
    if len(trace) != report.sweeps:
        raise InputError(f"trace has {len(trace)} rows but the result records {report.sweeps} sweeps")

    decrease = check_sufficient_decrease(
        trace,
        report.epsilon,
        report.kappa,
        report.tensor_norm,
        report.stabilization_sweep,
        report.initial_objective,
    )
    truncation = check_truncation(trace, report.kappa, report.initial_rank, report.stabilization_sweep)
    fit, fit_error = None, None
    try:
        fit = rate_fit(trace, report.tensor_norm, report.stabilization_sweep)
    except WindowTooShort as e:
        fit_error = e.detail

    feasibility = None
    rerun_objective = None
    input_path = Path(manifest.input_path)
    if input_path.exists():
        verify_digest(input_path, manifest.input_digest)
        tensor = read_dtf(input_path)
        cfg = SolverConfig(**manifest.config).model_copy(update={"keep_states": True})
        result = SolverController.solve_multistart(
            tensor, manifest.rank, manifest.orth_modes, cfg, manifest.restarts
        )
        rerun_objective = result.objective
        if rerun_objective != report.objective:
            logger.warning(f"Re-run objective {rerun_objective!r} differs from recorded {report.objective!r}")
        subgrad = check_subgrad_bound(tensor, result)
        feasibility = check_feasibility(result.factors)
    else:
        logger.warning(f"Input {input_path} not found; subgradient bound skipped")
        subgrad = SubgradReport(passed=True, skipped=True)

    diagnostics = DiagnosticsReport(
        passed=decrease.passed
        and subgrad.passed
        and truncation.passed
        and (feasibility is None or feasibility.passed),
        sufficient_decrease=decrease,
        subgrad_bound=subgrad,
        truncation=truncation,
        feasibility=feasibility,
        rate_fit=fit,
        rate_fit_error=fit_error,
        final_kkt_residual=report.kkt_residual,
        rerun_objective=rerun_objective,
    )
    if args.out:
        write_json(args.out, diagnostics)
    print(diagnostics.model_dump_json(indent=2))
    return 0 if diagnostics.passed else CHECKS_FAILED
