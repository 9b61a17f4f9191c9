from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator


class DenseTensor(BaseModel):
    """k-way dense real tensor, stored row-major (last index fastest) and read-only"""

    data: np.ndarray = Field(..., description="k-way float64 array")

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True,
    }

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, v):
        array = np.array(v, dtype=np.float64, order="C", copy=True)
        if array.ndim < 1:
            raise ValueError("tensor must have at least one mode")
        if any(n < 1 for n in array.shape):
            raise ValueError(f"every dimension must be positive, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("tensor entries must be finite")
        array.setflags(write=False)
        return array

    @classmethod
    def from_flat(cls, shape: Sequence[int], values: Sequence[float]) -> "DenseTensor":
        shape = tuple(int(n) for n in shape)
        flat = np.asarray(values, dtype=np.float64)
        if flat.size != int(np.prod(shape)):
            raise ValueError(f"expected {int(np.prod(shape))} values for shape {shape}, got {flat.size}")
        return cls(data=flat.reshape(shape))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def order(self) -> int:
        return self.data.ndim

    def flat(self) -> np.ndarray:
        return self.data.ravel()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None
