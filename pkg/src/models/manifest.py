from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from src.config import APP_VERSION


class RunManifest(BaseModel):
    """Everything needed to reproduce a solve run bit-identically"""

    config: Dict[str, Any] = Field(..., description="SolverConfig snapshot")
    input_path: str
    input_digest: str = Field(..., description="SHA-256 of the input .dtf file")
    rank: int
    orth_modes: int
    restarts: int = 1
    seed: int
    tool_version: str = APP_VERSION
    outputs: Dict[str, str] = Field(default_factory=dict)


class PlantedTruth(BaseModel):
    """Ground-truth sidecar written next to a planted tensor"""

    dims: List[int]
    rank: int
    orth_modes: int
    noise: float
    seed: int
    lam: List[float]
    factors: List[List[List[float]]]
    signal_norm: float
    data_digest: Optional[str] = None


class GenReport(BaseModel):
    kind: str
    out: str
    dims: List[int]
    digest: str
    truth: Optional[str] = Field(None, description="Path of the ground-truth sidecar (planted only)")
