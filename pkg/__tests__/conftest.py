import pytest

from src.controllers.generator_controller import GeneratorController
from src.controllers.linalg_controller import make_rng, random_orthonormal, random_unit_columns
from src.models.factors import FactorSet
from src.models.solver import SweepRecord


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def gaussian_tensor():
    """A generic 3x4x5 tensor."""
    return GeneratorController.gaussian_tensor([3, 4, 5], make_rng(7))


@pytest.fixture
def planted_case():
    """Noiseless rank-2 tensor with one orthonormal mode, plus its ground truth."""
    return GeneratorController.planted_tensor([5, 5, 5], 2, 1, 0.0, make_rng(11), seed=11)


@pytest.fixture
def random_factors():
    """Factory for feasible FactorSets with random weights."""

    def build(dims, r, s, seed=3):
        rng = make_rng(seed)
        factors = [
            random_orthonormal(n, r, rng) if i < s else random_unit_columns(n, r, rng) for i, n in enumerate(dims)
        ]
        return FactorSet(factors=factors, lam=rng.standard_normal(r), s=s)

    return build


@pytest.fixture
def make_record():
    """Factory for SweepRecords with neutral defaults."""

    def build(sweep, objective, step_norm=0.0, **fields):
        values = dict(
            sweep=sweep,
            objective=objective,
            step_norm=step_norm,
            joint_step_norm=step_norm,
            kkt_residual=0.0,
            rank_before=2,
            rank_after=2,
        )
        values.update(fields)
        return SweepRecord(**values)

    return build
