"""Run artifacts: atomic writes, SHA-256 digests, JSON reports and trace CSV."""
import csv
import hashlib
import io
import os
import tempfile
from pathlib import Path
from typing import List, Sequence, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.errors import DigestMismatch, InputError
from src.models.solver import SweepRecord

M = TypeVar("M", bound=BaseModel)

TRACE_HEAD = ["sweep", "objective", "step_norm", "joint_step_norm", "kkt_residual", "rank"]
TRACE_TAIL = ["proximal_count", "truncated", "truncation_increase", "zero_contraction", "lambda_step_norm"]


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write through a temp file in the target directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    try:
        return sha256_bytes(Path(path).read_bytes())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}")


def factor_digest(F: np.ndarray) -> str:
    """Digest of the little-endian float64 bytes of a factor matrix in row-major order"""
    return sha256_bytes(np.ascontiguousarray(F, dtype="<f8").tobytes())


def verify_digest(path: Union[str, Path], expected: str) -> None:
    actual = sha256_file(path)
    if actual != expected:
        raise DigestMismatch(f"{path} has digest {actual[:12]}..., manifest records {expected[:12]}...")


def write_json(path: Union[str, Path], model: BaseModel) -> Path:
    return atomic_write_text(path, model.model_dump_json(indent=2) + "\n")


def read_json(path: Union[str, Path], model_cls: Type[M]) -> M:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}")
    try:
        return model_cls.model_validate_json(text)
    except ValidationError as e:
        raise InputError(f"malformed {path.name}: {e.error_count()} validation errors")


def format_trace_csv(trace: Sequence[SweepRecord], s: int) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_HEAD + [f"sigma_min_{i + 1}" for i in range(s)] + TRACE_TAIL)
    for record in trace:
        sigma = [repr(v) for v in record.sigma_min] + [""] * (s - len(record.sigma_min))
        writer.writerow(
            [
                record.sweep,
                repr(record.objective),
                repr(record.step_norm),
                repr(record.joint_step_norm),
                repr(record.kkt_residual),
                record.rank_after,
                *sigma,
                record.proximal_count,
                ";".join(str(j) for j in record.truncated),
                repr(record.truncation_increase),
                int(record.zero_contraction),
                repr(record.lambda_step_norm),
            ]
        )
    return buffer.getvalue()


def write_trace_csv(path: Union[str, Path], trace: Sequence[SweepRecord], s: int) -> Path:
    return atomic_write_text(path, format_trace_csv(trace, s))


def format_histogram_csv(values: Sequence[float]) -> str:
    """Counts of log10(value) per decade; zeros fall in the lowest bin"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["log10_low", "log10_high", "count"])
    if len(values) > 0:
        logs = np.log10(np.maximum(np.asarray(values, dtype=np.float64), np.finfo(np.float64).tiny))
        low, high = int(np.floor(logs.min())), int(np.floor(logs.max())) + 1
        counts, edges = np.histogram(logs, bins=np.arange(low, high + 1))
        for count, left, right in zip(counts, edges[:-1], edges[1:]):
            writer.writerow([int(left), int(right), int(count)])
    return buffer.getvalue()


def read_trace_csv(path: Union[str, Path]) -> List[SweepRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}")
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [c for c in TRACE_HEAD + TRACE_TAIL if c not in header]
    if missing:
        raise InputError(f"trace {path.name} lacks columns {missing}")
    sigma_cols = [c for c in header if c.startswith("sigma_min_")]

    records = []
    try:
        for row in reader:
            truncated = [int(j) for j in row["truncated"].split(";") if j]
            rank = int(row["rank"])
            records.append(
                SweepRecord(
                    sweep=int(row["sweep"]),
                    objective=float(row["objective"]),
                    step_norm=float(row["step_norm"]),
                    joint_step_norm=float(row["joint_step_norm"]),
                    lambda_step_norm=float(row["lambda_step_norm"]),
                    kkt_residual=float(row["kkt_residual"]),
                    rank_before=rank + len(truncated),
                    rank_after=rank,
                    sigma_min=[float(row[c]) for c in sigma_cols if row[c]],
                    proximal_count=int(row["proximal_count"]),
                    truncated=truncated,
                    truncation_increase=float(row["truncation_increase"]),
                    zero_contraction=bool(int(row["zero_contraction"])),
                )
            )
    except (ValueError, ValidationError) as e:
        raise InputError(f"malformed trace row in {path.name}: {e}")
    return records
