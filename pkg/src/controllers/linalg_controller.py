from typing import Optional

import numpy as np
from scipy.linalg import svd

from src.errors import InputError
from src.models.factors import PolarFactors


def make_rng(seed: Optional[int] = None, *, stream: Optional[np.random.SeedSequence] = None) -> np.random.Generator:
    """Counter-based generator; every random draw in the package goes through one of these"""
    if stream is not None:
        return np.random.Generator(np.random.Philox(stream))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def polar_decompose(Y: np.ndarray) -> PolarFactors:
    """Polar decomposition Y = Q H through the thin SVD Y = W diag(sigma) V^T.

    Q = W V^T maximizes <Q', Y> over matrices with orthonormal columns and
    H = V diag(sigma) V^T. Q is invariant to the sign of each singular pair;
    for rank-deficient Y the choice among valid factors is fixed by always
    using the gesvd driver.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise InputError("polar decomposition needs a matrix")
    n, m = Y.shape
    if n < m:
        raise InputError(f"polar decomposition needs n >= m, got {n}x{m}")
    if not np.all(np.isfinite(Y)):
        raise InputError("polar decomposition input has non-finite entries")
    if m == 0:
        return PolarFactors(Q=np.zeros((n, 0)), H=np.zeros((0, 0)), sigma_min=0.0)

    W, sigma, Vt = svd(Y, full_matrices=False, lapack_driver="gesvd")
    Q = W @ Vt
    H = sym((Vt.T * sigma) @ Vt)
    return PolarFactors(Q=Q, H=H, sigma_min=float(max(sigma.min(), 0.0)))


def qr_retraction(X: np.ndarray) -> np.ndarray:
    """Q factor of X with the diagonal of R made nonnegative"""
    Q, R = np.linalg.qr(X)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def normalize_columns(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=0)


def random_orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    if r > n:
        raise InputError(f"cannot draw {r} orthonormal columns in dimension {n}")
    return qr_retraction(rng.standard_normal((n, r)))


def random_unit_columns(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    if r > n:
        raise InputError(f"rank {r} exceeds dimension {n}")
    return normalize_columns(rng.standard_normal((n, r)))


def stiefel_residual(U: np.ndarray) -> float:
    return float(np.linalg.norm(U.T @ U - np.eye(U.shape[1])))


def sphere_residual(U: np.ndarray) -> float:
    if U.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.norm(U, axis=0) - 1.0)))
