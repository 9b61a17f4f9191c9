"""Multi-start Newton search for critical points of small closed-form NLS problems.

f(x) = 1/2 ||psi(x) - b||^2 for the hyperboloid parametrisation
psi(s, t) = (s^2, s^3 t, s^4 t^2) and the LU parametrisation
psi(x, y, z, w) = (x, z/x, y, w - yz/x) of a 2x2 matrix.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import InputError
from src.models.nlslab import (
    CriticalPoint,
    CriticalPoint2D,
    CriticalPoint4D,
    LocationSummary,
    TargetOutcome,
)

logger = logging.getLogger(__name__)

MAX_ITER = 100
CONVERGED_TOL = 1e-12
REPORT_TOL = 1e-9
DOMAIN_TOL = 1e-8
DEDUP_TOL = 1e-6
START_BOX = 3.0
MAX_HALVINGS = 40


class HyperboloidModel:
    """psi(s, t) = (s^2, s^3 t, s^4 t^2); image lies on xz - y^2 = 0"""

    dim = 2
    target_dim = 3

    @staticmethod
    def psi(X: np.ndarray) -> np.ndarray:
        s, t = X[:, 0], X[:, 1]
        return np.stack([s**2, s**3 * t, s**4 * t**2], axis=1)

    @staticmethod
    def jacobian(X: np.ndarray) -> np.ndarray:
        s, t = X[:, 0], X[:, 1]
        zero = np.zeros_like(s)
        rows = [
            np.stack([2 * s, zero], axis=1),
            np.stack([3 * s**2 * t, s**3], axis=1),
            np.stack([4 * s**3 * t**2, 2 * s**4 * t], axis=1),
        ]
        return np.stack(rows, axis=1)

    @staticmethod
    def curvature(X: np.ndarray, R: np.ndarray) -> np.ndarray:
        """sum_m R_m * Hess(psi_m)"""
        s, t = X[:, 0], X[:, 1]
        H = np.zeros((X.shape[0], 2, 2))
        H[:, 0, 0] = 2 * R[:, 0] + 6 * s * t * R[:, 1] + 12 * s**2 * t**2 * R[:, 2]
        H[:, 0, 1] = 3 * s**2 * R[:, 1] + 8 * s**3 * t * R[:, 2]
        H[:, 1, 0] = H[:, 0, 1]
        H[:, 1, 1] = 2 * s**4 * R[:, 2]
        return H

    @staticmethod
    def make_point(x: np.ndarray, gradient_norm: float, residual: float, kind: str) -> CriticalPoint2D:
        return CriticalPoint2D(s=float(x[0]), t=float(x[1]), gradient_norm=gradient_norm, residual=residual, kind=kind)


class LUModel:
    """psi(x, y, z, w) = (x, z/x, y, w - yz/x): the L and U entries of X = [[x, y], [z, w]]"""

    dim = 4
    target_dim = 4

    @staticmethod
    def psi(X: np.ndarray) -> np.ndarray:
        x, y, z, w = X.T
        return np.stack([x, z / x, y, w - y * z / x], axis=1)

    @staticmethod
    def jacobian(X: np.ndarray) -> np.ndarray:
        x, y, z, w = X.T
        zero, one = np.zeros_like(x), np.ones_like(x)
        rows = [
            np.stack([one, zero, zero, zero], axis=1),
            np.stack([-z / x**2, zero, 1 / x, zero], axis=1),
            np.stack([zero, one, zero, zero], axis=1),
            np.stack([y * z / x**2, -z / x, -y / x, one], axis=1),
        ]
        return np.stack(rows, axis=1)

    @staticmethod
    def curvature(X: np.ndarray, R: np.ndarray) -> np.ndarray:
        x, y, z, _ = X.T
        r2, r4 = R[:, 1], R[:, 3]
        H = np.zeros((X.shape[0], 4, 4))
        H[:, 0, 0] = 2 * z / x**3 * r2 - 2 * y * z / x**3 * r4
        H[:, 0, 1] = z / x**2 * r4
        H[:, 0, 2] = -1 / x**2 * r2 + y / x**2 * r4
        H[:, 1, 2] = -1 / x * r4
        return H + np.transpose(np.triu(H, 1), (0, 2, 1))

    @staticmethod
    def make_point(x: np.ndarray, gradient_norm: float, residual: float, kind: str) -> CriticalPoint4D:
        return CriticalPoint4D(
            x=float(x[0]),
            y=float(x[1]),
            z=float(x[2]),
            w=float(x[3]),
            gradient_norm=gradient_norm,
            residual=residual,
            kind=kind,
        )


MODELS: Dict[str, type] = {"hyperboloid": HyperboloidModel, "lu": LUModel}


def get_model(kind: str):
    try:
        return MODELS[kind]
    except KeyError:
        raise InputError(f"unknown model kind '{kind}', expected one of {sorted(MODELS)}")


def _gradient(model, X: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    R = model.psi(X) - b
    J = model.jacobian(X)
    return np.einsum("nmd,nm->nd", J, R), J, R


def first_order_residual(model, x: Sequence[float], b: Sequence[float]) -> float:
    """||d psi(x)^T (psi(x) - b)||"""
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    G, _, _ = _gradient(model, X, np.asarray(b, dtype=np.float64))
    return float(np.linalg.norm(G[0]))


def classify(H: np.ndarray, scale: float = 1.0) -> str:
    eigs = np.linalg.eigvalsh(H)
    tol = 1e-9 * max(scale, float(np.max(np.abs(eigs))))
    if np.all(eigs > tol):
        return "minimum"
    if np.all(eigs < -tol):
        return "maximum"
    if np.any(eigs > tol) and np.any(eigs < -tol):
        return "saddle"
    return "degenerate"


def _in_domain(X: np.ndarray, sign: np.ndarray) -> np.ndarray:
    return (np.sign(X[:, 0]) == sign) & (np.abs(X[:, 0]) > DOMAIN_TOL)


def newton_search(model, b: np.ndarray, X0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Damped Newton on grad f = 0, all starts at once.

    A step is halved until ||grad f|| strictly decreases and the first
    coordinate keeps its sign; starts that cannot make progress are frozen.
    Returns the final iterates and their gradient norms.
    """
    X = np.array(X0, dtype=np.float64)
    sign = np.sign(X[:, 0])
    G, J, R = _gradient(model, X, b)
    gnorm = np.linalg.norm(G, axis=1)
    active = _in_domain(X, sign) & np.isfinite(gnorm)

    for _ in range(MAX_ITER):
        active &= gnorm > CONVERGED_TOL
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        H = np.einsum("nmd,nme->nde", J[idx], J[idx]) + model.curvature(X[idx], R[idx])
        step = -np.einsum("nde,ne->nd", np.linalg.pinv(H), G[idx])
        # every pending row shares the step length t; only those rows are re-evaluated
        rows, t = idx, 1.0
        for _ in range(MAX_HALVINGS):
            trial = X[rows] + t * step
            with np.errstate(all="ignore"):
                G_trial, J_trial, R_trial = _gradient(model, trial, b)
            n_trial = np.linalg.norm(G_trial, axis=1)
            ok = _in_domain(trial, sign[rows]) & np.isfinite(n_trial) & (n_trial < gnorm[rows])
            accepted = rows[ok]
            X[accepted] = trial[ok]
            G[accepted], J[accepted], R[accepted] = G_trial[ok], J_trial[ok], R_trial[ok]
            gnorm[accepted] = n_trial[ok]
            rows, step = rows[~ok], step[~ok]
            if rows.size == 0:
                break
            t *= 0.5
        active[rows] = False
    return X, gnorm


def deduplicate(X: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Sort lexicographically, then keep a point only if it is farther than tol from every kept one"""
    if X.shape[0] == 0:
        return X
    order = np.lexsort(X.T[::-1])
    kept: List[np.ndarray] = []
    for x in X[order]:
        if all(np.linalg.norm(x - y) > tol for y in kept):
            kept.append(x)
    return np.array(kept)


def _draw_starts(model, b: np.ndarray, starts: int, rng: np.random.Generator, initial_points) -> np.ndarray:
    if starts < 1:
        raise InputError(f"starts must be positive, got {starts}")
    scale = 1.0 + float(np.linalg.norm(b))
    X = rng.uniform(-START_BOX, START_BOX, size=(starts, model.dim)) * scale
    if initial_points is not None:
        seeded = np.asarray(initial_points, dtype=np.float64).reshape(-1, model.dim)
        X = np.vstack([seeded, X])
    return X


def find_criticals(
    model,
    b: Sequence[float],
    starts: int,
    rng: np.random.Generator,
    initial_points: Optional[Sequence[Sequence[float]]] = None,
) -> List[CriticalPoint]:
    b = np.asarray(b, dtype=np.float64)
    X, gnorm = newton_search(model, b, _draw_starts(model, b, starts, rng, initial_points))
    good = (gnorm <= REPORT_TOL) & (np.abs(X[:, 0]) > DOMAIN_TOL)
    unique = deduplicate(X[good])

    points = []
    for x in unique:
        G, J, R = _gradient(model, x[None, :], b)
        H = J[0].T @ J[0] + model.curvature(x[None, :], R)[0]
        points.append(
            model.make_point(
                x,
                gradient_norm=float(np.linalg.norm(G[0])),
                residual=float(np.linalg.norm(R[0])),
                kind=classify(H),
            )
        )
    logger.debug(f"{len(points)} distinct critical points from {X.shape[0]} starts")
    return points


def hyperboloid_criticals(b, starts: int, rng: np.random.Generator, initial_points=None) -> List[CriticalPoint2D]:
    if len(b) != 3:
        raise InputError(f"hyperboloid target must have 3 entries, got {len(b)}")
    return find_criticals(HyperboloidModel, b, starts, rng, initial_points)


def lu_criticals(b, starts: int, rng: np.random.Generator, initial_points=None) -> List[CriticalPoint4D]:
    if len(b) != 4:
        raise InputError(f"LU target must have 4 entries, got {len(b)}")
    return find_criticals(LUModel, b, starts, rng, initial_points)


def plan_location(
    kind: str,
    num_b: int,
    rng: np.random.Generator,
    targets: Optional[Sequence[Sequence[float]]] = None,
) -> List[Tuple[np.ndarray, np.random.Generator]]:
    """Targets (Gaussian unless given) paired with independent child generators"""
    if num_b < 1:
        raise InputError(f"num_b must be positive, got {num_b}")
    dim = get_model(kind).target_dim
    if targets is None:
        B = rng.standard_normal((num_b, dim))
    else:
        B = np.asarray(targets, dtype=np.float64).reshape(-1, dim)
        if B.shape[0] != num_b:
            raise InputError(f"expected {num_b} targets, got {B.shape[0]}")
    return list(zip(B, rng.spawn(num_b)))


def evaluate_target(
    kind: str,
    b: np.ndarray,
    starts: int,
    rng: np.random.Generator,
    initial_points=None,
    threshold: float = DEDUP_TOL,
) -> TargetOutcome:
    points = find_criticals(get_model(kind), b, starts, rng, initial_points)
    if not points:
        return TargetOutcome(target=[float(v) for v in b], points_found=0)
    min_datum = min(p.datum for p in points)
    return TargetOutcome(
        target=[float(v) for v in b],
        points_found=len(points),
        min_datum=min_datum,
        violated=min_datum <= threshold,
    )


def summarize_location(
    kind: str,
    outcomes: Sequence[TargetOutcome],
    starts: int,
    threshold: float,
    seed: Optional[int] = None,
) -> LocationSummary:
    violations = sum(1 for o in outcomes if o.violated)
    if violations:
        logger.warning(f"{violations} of {len(outcomes)} {kind} targets have a critical point on the exceptional set")
    return LocationSummary(
        kind=kind,
        num_b=len(outcomes),
        starts=starts,
        seed=seed,
        threshold=threshold,
        violations=violations,
        targets=list(outcomes),
        minima=[o.min_datum for o in outcomes if o.min_datum is not None],
    )


def location_experiment(
    kind: str,
    num_b: int,
    starts: int,
    rng: np.random.Generator,
    targets=None,
    initial_points=None,
    threshold: float = DEDUP_TOL,
    seed: Optional[int] = None,
) -> LocationSummary:
    """Count targets whose found critical points reach the exceptional set (s = t, resp. det X = 0)"""
    outcomes = [
        evaluate_target(kind, b, starts, child, initial_points, threshold)
        for b, child in plan_location(kind, num_b, rng, targets)
    ]
    return summarize_location(kind, outcomes, starts, threshold, seed)
