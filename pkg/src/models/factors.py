from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class PolarFactors(BaseModel):
    """Y = Q H with Q orthonormal columns and H symmetric positive semidefinite"""

    Q: np.ndarray
    H: np.ndarray
    sigma_min: float = Field(..., ge=0.0, description="Smallest eigenvalue of H")

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


class FactorSet(BaseModel):
    """Decision variables (U^(1), ..., U^(k), lambda) with s orthonormal leading modes"""

    factors: List[np.ndarray] = Field(..., description="Factor matrices U^(i) of size n_i x r")
    lam: np.ndarray = Field(..., description="Weights lambda_j")
    s: int = Field(..., ge=1, description="Number of orthonormal modes")

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("factors", mode="before")
    @classmethod
    def validate_factors(cls, v):
        matrices = [np.array(F, dtype=np.float64, copy=True) for F in v]
        for F in matrices:
            if F.ndim != 2:
                raise ValueError("factor matrices must be two-dimensional")
        return matrices

    @field_validator("lam", mode="before")
    @classmethod
    def validate_lam(cls, v):
        return np.array(v, dtype=np.float64, copy=True).reshape(-1)

    @model_validator(mode="after")
    def check_consistency(self):
        if not self.factors:
            raise ValueError("at least one factor matrix is required")
        if self.s > len(self.factors):
            raise ValueError(f"s={self.s} exceeds the number of modes {len(self.factors)}")
        widths = {F.shape[1] for F in self.factors}
        if len(widths) != 1 or widths.pop() != self.lam.size:
            raise ValueError("factor widths and lambda length must agree")
        return self

    @property
    def r(self) -> int:
        return int(self.lam.size)

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(F.shape[0] for F in self.factors)

    @property
    def gamma(self) -> np.ndarray:
        """Gamma = diag(lambda)"""
        return np.diag(self.lam)

    def with_lambda(self, lam: np.ndarray) -> "FactorSet":
        return FactorSet(factors=self.factors, lam=lam, s=self.s)

    def keep_columns(self, keep: np.ndarray) -> "FactorSet":
        return FactorSet(factors=[F[:, keep] for F in self.factors], lam=self.lam[keep], s=self.s)

    def column(self, j: int) -> List[np.ndarray]:
        return [F[:, j] for F in self.factors]
