import numpy as np
import pytest

from src.controllers.diagnostics_controller import (
    check_feasibility,
    check_subgrad_bound,
    check_sufficient_decrease,
    check_truncation,
    gradient,
    kkt_residual,
    project_tangent,
    rate_fit,
    run_diagnostics,
)
from src.controllers.generator_controller import GeneratorController
from src.controllers.linalg_controller import make_rng, normalize_columns, qr_retraction, sym
from src.controllers.solver_controller import SolverController
from src.errors import WindowTooShort
from src.models.factors import FactorSet
from src.models.solver import SolverConfig
from src.models.tensor import DenseTensor


def _objective_along(A, U, xi, h):
    moved = []
    for i, (F, X) in enumerate(zip(U.factors, xi)):
        retract = qr_retraction if i < U.s else normalize_columns
        moved.append(retract(F + h * X))
    return SolverController.objective(A, FactorSet(factors=moved, lam=U.lam, s=U.s))


@pytest.mark.parametrize("dims,r,s", [((3, 4, 5), 2, 1), ((4, 4, 4, 4), 3, 2)])
def test_gradient_matches_finite_differences(random_factors, dims, r, s):
    """Test <G, xi> equals the directional derivative along retracted tangent curves at 20 points."""
    A = GeneratorController.gaussian_tensor(dims, make_rng(17))
    h = 1e-5
    for seed in range(20):
        rng = make_rng(100 + seed)
        U = random_factors(dims, r, s, seed=seed)
        blocks, g_lambda = gradient(A, U)
        xi = project_tangent(U, [rng.standard_normal(F.shape) for F in U.factors])

        numeric = (_objective_along(A, U, xi, h) - _objective_along(A, U, xi, -h)) / (2 * h)
        analytic = sum(float(np.sum(G * X)) for G, X in zip(blocks, xi))
        assert numeric == pytest.approx(analytic, rel=1e-5, abs=1e-8)

        direction = rng.standard_normal(U.r)
        moved = [SolverController.objective(A, U.with_lambda(U.lam + t * direction)) for t in (h, -h)]
        assert (moved[0] - moved[1]) / (2 * h) == pytest.approx(float(g_lambda @ direction), rel=1e-5, abs=1e-8)


def test_project_tangent_is_tangent(random_factors, rng):
    """Test projected blocks lie in the Stiefel and sphere tangent spaces."""
    U = random_factors((4, 4, 4), 3, 1)
    xi = project_tangent(U, [rng.standard_normal(F.shape) for F in U.factors])

    assert np.abs(sym(U.factors[0].T @ xi[0])).max() < 1e-12
    for F, X in zip(U.factors[1:], xi[1:]):
        assert np.abs(np.einsum("ij,ij->j", F, X)).max() < 1e-12


def test_kkt_residual_vanishes_at_planted_point(planted_case):
    """Test the first-order residual is zero at an exact fit."""
    A, truth = planted_case
    U = FactorSet(factors=[np.array(F) for F in truth.factors], lam=truth.lam, s=1)
    assert kkt_residual(A, U) < 1e-12


def test_kkt_residual_gauge_invariant(gaussian_tensor, random_factors):
    """Test negating one column in two modes at once leaves the residual unchanged."""
    U = random_factors(gaussian_tensor.shape, 2, 1)
    flipped = [F.copy() for F in U.factors]
    flipped[0][:, 1] *= -1.0
    flipped[2][:, 1] *= -1.0
    gauge = FactorSet(factors=flipped, lam=U.lam, s=U.s)

    before = kkt_residual(gaussian_tensor, U)
    assert before > 1e-6
    assert kkt_residual(gaussian_tensor, gauge) == pytest.approx(before, rel=1e-12)


def test_kkt_residual_scaling(gaussian_tensor, random_factors, planted_case):
    """Test A -> cA, lambda -> c lambda scales the lambda block by c and factor blocks by c^2."""
    c = 3.5
    U = random_factors(gaussian_tensor.shape, 2, 1)
    scaled_A = DenseTensor(data=c * gaussian_tensor.data)
    blocks, g_lambda = gradient(gaussian_tensor, U)
    scaled_blocks, scaled_g_lambda = gradient(scaled_A, U.with_lambda(c * U.lam))

    np.testing.assert_allclose(scaled_g_lambda, c * g_lambda, rtol=1e-12, atol=1e-12)
    for G, scaled in zip(blocks, scaled_blocks):
        np.testing.assert_allclose(scaled, c**2 * G, rtol=1e-12, atol=1e-11)

    A, truth = planted_case
    critical = FactorSet(factors=[np.array(F) for F in truth.factors], lam=c * np.array(truth.lam), s=1)
    assert kkt_residual(DenseTensor(data=c * A.data), critical) < 1e-11


def test_check_feasibility(random_factors):
    """Test residuals of feasible and perturbed factor sets."""
    U = random_factors((4, 5, 6), 3, 2)
    assert check_feasibility(U).passed

    broken = FactorSet(factors=[U.factors[0] * 1.1] + U.factors[1:], lam=U.lam, s=2)
    report = check_feasibility(broken)
    assert not report.passed
    assert report.max_residual > 0.1


def test_sufficient_decrease_on_constant_trace(make_record):
    """Test a fixed point satisfies 0 >= 0."""
    trace = [make_record(p, 1.0) for p in range(1, 6)]
    report = check_sufficient_decrease(trace, 1e-3, 1.0, 1.0, initial_objective=1.0)

    assert report.passed
    assert report.checked == 5
    assert report.constant == pytest.approx(5e-4)


def test_sufficient_decrease_flags_violation(make_record):
    """Test an increase with a nonzero step is reported."""
    trace = [make_record(1, 1.0, 0.1), make_record(2, 1.5, 0.1), make_record(3, 1.0, 0.1)]
    report = check_sufficient_decrease(trace, 1e-2, 1.0, 1.0, initial_objective=2.0)

    assert not report.passed
    assert [v.sweep for v in report.violations] == [2]


def test_sufficient_decrease_skips_truncation_sweeps(make_record):
    """Test truncation sweeps and sweeps before stabilization are exempt."""
    trace = [
        make_record(1, 1.0, 0.1),
        make_record(2, 1.2, 0.1, truncated=[1], rank_after=1),
        make_record(3, 1.3, 0.1, zero_contraction=True),
        make_record(4, 1.1, 0.1),
    ]
    report = check_sufficient_decrease(trace, 1e-2, 1.0, 1.0, stabilization_sweep=2, initial_objective=2.0)

    assert report.passed
    assert report.checked == 1


def test_subgrad_bound_on_solve(gaussian_tensor):
    """Test W lies in the normal space and the bound holds on a real run."""
    result = SolverController.solve(gaussian_tensor, 2, 1, SolverConfig(max_sweeps=40, seed=5, keep_states=True))
    report = check_subgrad_bound(gaussian_tensor, result)

    assert report.passed
    assert not report.skipped
    assert report.checked > 0
    assert report.max_normal_residual < 1e-8


def test_checks_hold_on_proximal_corrected_sweeps():
    """Test the decrease and subgradient checks with the alpha = epsilon term active."""
    A = GeneratorController.gaussian_tensor([4, 4, 4, 4], make_rng(21))
    epsilon = 1e4
    result = SolverController.solve(A, 2, 2, SolverConfig(epsilon=epsilon, max_sweeps=40, seed=3, keep_states=True))

    # sigma_min <= ||A||^2 here, far below epsilon, so every orthonormal mode is corrected
    assert all(flag == epsilon for record in result.trace for flag in record.proximal_flags)
    assert all(record.proximal_count == 2 for record in result.trace)
    assert all(work.alpha == epsilon for state in result.states for work in state.modes[:2])

    subgrad = check_subgrad_bound(A, result)
    assert subgrad.passed
    assert subgrad.checked > 0
    assert subgrad.max_normal_residual < 1e-8

    decrease = check_sufficient_decrease(
        result.trace, result.epsilon, result.kappa, result.tensor_norm, result.stabilization_sweep, result.initial_objective
    )
    assert decrease.passed
    assert decrease.checked > 0


def test_subgrad_bound_skipped_without_states(gaussian_tensor, caplog):
    """Test the bound is skipped when states were not retained."""
    result = SolverController.solve(gaussian_tensor, 2, 1, SolverConfig(max_sweeps=5))
    report = check_subgrad_bound(gaussian_tensor, result)

    assert report.skipped
    assert "subgradient bound skipped" in caplog.text


def test_check_truncation(make_record):
    """Test late truncations and oversized jumps are flagged."""
    trace = [
        make_record(1, 1.0, truncated=[0], rank_after=1, truncation_increase=0.005),
        make_record(2, 0.9),
        make_record(3, 0.8, truncated=[0], rank_after=0, truncation_increase=0.5),
    ]
    report = check_truncation(trace, kappa=0.1, initial_rank=2, stabilization_sweep=1)

    assert not report.passed
    assert report.total_truncated == 2
    assert report.late_truncations == [3]
    assert [v.sweep for v in report.oversized_jumps] == [3]

    clean = check_truncation(trace[:2], kappa=0.1, initial_rank=2, stabilization_sweep=1)
    assert clean.passed


def test_rate_fit_geometric(make_record):
    """Test g_p - g_* = 0.5^p gives Q- and R-linear rate 0.5."""
    trace = [make_record(p + 1, 0.5**p) for p in range(81)]
    fit = rate_fit(trace, tensor_norm=1.0)

    assert fit.q_tail_median == pytest.approx(0.5, abs=1e-6)
    assert fit.r_linear_rho == pytest.approx(0.5, abs=1e-6)
    assert fit.r_squared > 0.999
    assert not fit.sublinear


def test_rate_fit_harmonic_is_sublinear(make_record):
    """Test g_p - g_* = 1/p is flagged sublinear."""
    trace = [make_record(p, 1.0 / p) for p in range(1, 20001)]
    fit = rate_fit(trace, tensor_norm=1.0)

    assert fit.q_tail_median > 0.999
    assert fit.sublinear


def test_rate_fit_window_too_short(make_record):
    """Test short or flat traces cannot be fitted."""
    with pytest.raises(WindowTooShort):
        rate_fit([make_record(p, 0.5**p) for p in range(1, 10)], tensor_norm=1.0)
    with pytest.raises(WindowTooShort):
        rate_fit([make_record(p, 1.0) for p in range(1, 50)], tensor_norm=1.0)


def test_run_diagnostics_bundle(gaussian_tensor):
    """Test the bundled report on a run with retained states."""
    result = SolverController.solve(gaussian_tensor, 2, 1, SolverConfig(max_sweeps=60, seed=2, keep_states=True))
    report = run_diagnostics(result, gaussian_tensor)

    assert report.sufficient_decrease.passed
    assert report.truncation.passed
    assert report.feasibility.passed
    assert report.final_kkt_residual == result.kkt_residual
