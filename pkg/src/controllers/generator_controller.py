import logging
from typing import Sequence, Tuple

import numpy as np

from src.controllers.linalg_controller import random_orthonormal, random_unit_columns
from src.controllers.tensor_controller import frobenius, rank1_sum
from src.errors import InputError
from src.models.factors import FactorSet
from src.models.manifest import PlantedTruth
from src.models.tensor import DenseTensor

logger = logging.getLogger(__name__)


class GeneratorController:
    @staticmethod
    def validate_dims(dims: Sequence[int]) -> Tuple[int, ...]:
        dims = tuple(int(n) for n in dims)
        if not dims:
            raise InputError("at least one dimension is required")
        if any(n < 1 for n in dims):
            raise InputError(f"dimensions must be positive, got {list(dims)}")
        return dims

    @staticmethod
    def gaussian_tensor(dims: Sequence[int], rng: np.random.Generator) -> DenseTensor:
        """I.i.d. standard normal entries"""
        dims = GeneratorController.validate_dims(dims)
        return DenseTensor(data=rng.standard_normal(dims))

    @staticmethod
    def planted_factors(dims: Sequence[int], r: int, s: int, rng: np.random.Generator) -> FactorSet:
        dims = GeneratorController.validate_dims(dims)
        if r < 1 or r > min(dims):
            raise InputError(f"rank must lie in [1, {min(dims)}], got {r}")
        if not 1 <= s <= len(dims):
            raise InputError(f"orthonormal mode count must lie in [1, {len(dims)}], got {s}")
        factors = [
            random_orthonormal(n, r, rng) if i < s else random_unit_columns(n, r, rng) for i, n in enumerate(dims)
        ]
        lam = rng.uniform(1.0, 2.0, size=r) * rng.choice([-1.0, 1.0], size=r)
        return FactorSet(factors=factors, lam=lam, s=s)

    @staticmethod
    def planted_tensor(
        dims: Sequence[int],
        r: int,
        s: int,
        noise: float,
        rng: np.random.Generator,
        seed: int = 0,
    ) -> Tuple[DenseTensor, PlantedTruth]:
        """rank1_sum of a random feasible FactorSet plus noise * ||signal|| * N / ||N||"""
        if noise < 0:
            raise InputError(f"noise must be non-negative, got {noise}")
        truth = GeneratorController.planted_factors(dims, r, s, rng)
        signal = rank1_sum(truth)
        signal_norm = frobenius(signal)
        data = signal.data
        if noise > 0:
            N = rng.standard_normal(signal.shape)
            data = data + noise * signal_norm * N / np.linalg.norm(N)
        logger.info(f"Planted rank-{r} tensor of shape {signal.shape}, ||signal||={signal_norm:.6e}, noise={noise}")
        sidecar = PlantedTruth(
            dims=list(signal.shape),
            rank=r,
            orth_modes=s,
            noise=noise,
            seed=seed,
            lam=truth.lam.tolist(),
            factors=[F.tolist() for F in truth.factors],
            signal_norm=signal_norm,
        )
        return DenseTensor(data=data), sidecar
