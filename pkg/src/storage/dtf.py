"""Plain-text dense tensor format (.dtf).

Line 1 holds the order k, line 2 the k dimensions, and the rest the entries
in row-major order. Any whitespace may separate values.
"""
import logging
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from src.errors import InputError
from src.models.tensor import DenseTensor
from src.storage.artifacts import atomic_write_text

logger = logging.getLogger(__name__)


def parse_dtf(text: str) -> DenseTensor:
    tokens = text.split()
    if not tokens:
        raise InputError("empty tensor file")
    try:
        k = int(tokens[0])
    except ValueError:
        raise InputError(f"tensor order must be an integer, got '{tokens[0]}'")
    if k < 1:
        raise InputError(f"tensor order must be positive, got {k}")
    if len(tokens) < 1 + k:
        raise InputError(f"expected {k} dimensions after the order")
    try:
        dims = [int(t) for t in tokens[1 : 1 + k]]
        values = [float(t) for t in tokens[1 + k :]]
    except ValueError as e:
        raise InputError(f"malformed tensor file: {e}")
    if any(n < 1 for n in dims):
        raise InputError(f"dimensions must be positive, got {dims}")
    try:
        return DenseTensor.from_flat(dims, values)
    except (ValueError, ValidationError) as e:
        raise InputError(f"invalid tensor data: {e}")


def format_dtf(tensor: DenseTensor) -> str:
    """One line per last-mode fiber, floats written with repr so reading back is exact"""
    lines = [str(tensor.order), " ".join(str(n) for n in tensor.shape)]
    fibers = tensor.data.reshape(-1, tensor.shape[-1])
    lines.extend(" ".join(repr(float(v)) for v in fiber) for fiber in fibers)
    return "\n".join(lines) + "\n"


def read_dtf(path: Union[str, Path]) -> DenseTensor:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read tensor file {path}: {e.strerror or e}")
    tensor = parse_dtf(text)
    logger.debug(f"Read tensor of shape {tensor.shape} from {path}")
    return tensor


def write_dtf(path: Union[str, Path], tensor: DenseTensor) -> Path:
    return atomic_write_text(path, format_dtf(tensor))
