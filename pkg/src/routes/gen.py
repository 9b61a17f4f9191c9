import argparse
import logging
from pathlib import Path

from src.controllers.generator_controller import GeneratorController
from src.controllers.linalg_controller import make_rng
from src.errors import InputError
from src.models.manifest import GenReport
from src.routes.args import parse_dims
from src.storage.artifacts import sha256_file, write_json
from src.storage.dtf import write_dtf

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen", help="Generate a Gaussian or planted tensor (.dtf)")
    parser.add_argument("kind", choices=["gaussian", "planted"])
    parser.add_argument("--dims", type=parse_dims, required=True, help="Dimensions, e.g. 6,6,6")
    parser.add_argument("--rank", type=int, default=None, help="Planted rank r")
    parser.add_argument("--orth-modes", type=int, default=1, help="Planted orthonormal mode count s")
    parser.add_argument("--noise", type=float, default=0.0, help="Relative noise level")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output .dtf path")
    parser.set_defaults(handler=handle)


def truth_path(out: Path) -> Path:
    return out.with_name(out.name + ".truth.json")


def handle(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise InputError(f"seed must be non-negative, got {args.seed}")
    out = Path(args.out)
    rng = make_rng(args.seed)

    if args.kind == "gaussian":
        tensor = GeneratorController.gaussian_tensor(args.dims, rng)
        write_dtf(out, tensor)
        report = GenReport(kind=args.kind, out=str(out), dims=list(tensor.shape), digest=sha256_file(out))
    else:
        if args.rank is None:
            raise InputError("planted tensors need --rank")
        tensor, truth = GeneratorController.planted_tensor(
            args.dims, args.rank, args.orth_modes, args.noise, rng, seed=args.seed
        )
        write_dtf(out, tensor)
        digest = sha256_file(out)
        sidecar = write_json(truth_path(out), truth.model_copy(update={"data_digest": digest}))
        report = GenReport(kind=args.kind, out=str(out), dims=list(tensor.shape), digest=digest, truth=str(sidecar))

    logger.info(f"Wrote {args.kind} tensor {report.dims} to {out}")
    print(report.model_dump_json(indent=2))
    return 0
