import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.config import APP_NAME, APP_VERSION, LOG_LEVEL
from src.errors import InputError, PotensorError
from src.routes import diagnose, experiment, gen, solve

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; that code means MaxSweeps here, so usage errors raise InputError"""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> CliParser:
    parser = CliParser(
        prog=APP_NAME,
        description="Low-rank partially orthogonal tensor approximation with iAPD-ALS",
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for route in (gen, solve, diagnose, experiment):
        route.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; JSON goes to stdout, logs to stderr, the return value is the exit code"""
    logging.basicConfig(
        level=LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except PotensorError as e:
        logger.error(e.detail)
        return e.exit_code
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        logger.error(f"invalid configuration: {field}: {first['msg']}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
