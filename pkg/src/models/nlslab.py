from abc import ABC, abstractmethod
from typing import List, Optional

from pydantic import BaseModel, Field


class CriticalPoint(BaseModel, ABC):
    """Shared fields; subclasses define the coordinates and the classification datum"""

    gradient_norm: float = Field(..., ge=0.0)
    residual: float = Field(..., ge=0.0, description="||psi(x) - b||")
    kind: str = Field(..., description="minimum, saddle, maximum or degenerate")

    @property
    @abstractmethod
    def coordinates(self) -> List[float]: ...

    @property
    @abstractmethod
    def datum(self) -> float: ...


class CriticalPoint2D(CriticalPoint):
    """Critical point (s, t) of the hyperboloid projection problem"""

    s: float
    t: float

    @property
    def coordinates(self) -> List[float]:
        return [self.s, self.t]

    @property
    def datum(self) -> float:
        return abs(self.s - self.t)


class CriticalPoint4D(CriticalPoint):
    """Critical point X = [[x, y], [z, w]] of the LU projection problem"""

    x: float
    y: float
    z: float
    w: float

    @property
    def coordinates(self) -> List[float]:
        return [self.x, self.y, self.z, self.w]

    @property
    def datum(self) -> float:
        return abs(self.x * self.w - self.y * self.z)


class TargetOutcome(BaseModel):
    target: List[float]
    points_found: int
    min_datum: Optional[float] = None
    violated: bool = False


class LocationSummary(BaseModel):
    kind: str
    num_b: int
    starts: int
    seed: Optional[int] = None
    threshold: float
    violations: int
    targets: List[TargetOutcome]
    minima: List[float] = Field(default_factory=list, description="Per-target minimum classification datum")
