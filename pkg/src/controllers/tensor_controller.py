"""Multilinear contractions on dense tensors.

Contractions fold one mode at a time, trailing modes first, so the innermost
(contiguous) axis is consumed by a matrix-vector product.
"""
from typing import List, Optional, Sequence

import numpy as np

from src.errors import InputError
from src.models.factors import FactorSet
from src.models.tensor import DenseTensor


def _check_vectors(A: DenseTensor, u: Sequence[Optional[np.ndarray]], skip: Optional[int] = None) -> List[Optional[np.ndarray]]:
    if len(u) != A.order:
        raise InputError(f"expected {A.order} vectors, got {len(u)}")
    vectors: List[Optional[np.ndarray]] = []
    for i, (n, v) in enumerate(zip(A.shape, u)):
        if i == skip:
            vectors.append(None)
            continue
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != n:
            raise InputError(f"vector for mode {i} has shape {v.shape}, expected ({n},)")
        vectors.append(v)
    return vectors


def _check_mode(A: DenseTensor, i: int) -> None:
    if not 0 <= i < A.order:
        raise InputError(f"mode index {i} out of range for a {A.order}-way tensor")


def contract_full(A: DenseTensor, u: Sequence[np.ndarray]) -> float:
    """<A, u_1 x ... x u_k>"""
    vectors = _check_vectors(A, u)
    T = A.data
    for v in reversed(vectors):
        T = T @ v
    return float(T)


def contract_skip(A: DenseTensor, u: Sequence[Optional[np.ndarray]], i: int) -> np.ndarray:
    """Contract every mode except i; the entry u[i] is ignored (may be None)."""
    _check_mode(A, i)
    vectors = _check_vectors(A, u, skip=i)
    T = A.data
    for t in range(A.order - 1, i, -1):
        T = T @ vectors[t]
    for t in range(i):
        T = np.tensordot(vectors[t], T, axes=(0, 0))
    return np.array(T, dtype=np.float64)


def mode_matrix(A: DenseTensor, factors: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Column-wise contract_skip: column j is A tau_i at (u^(1)_j, ..., u^(k)_j)."""
    _check_mode(A, i)
    if len(factors) != A.order:
        raise InputError(f"expected {A.order} factor matrices, got {len(factors)}")
    for t, (n, F) in enumerate(zip(A.shape, factors)):
        if F.shape[0] != n:
            raise InputError(f"factor {t} has {F.shape[0]} rows, expected {n}")
    r = factors[0].shape[1]
    if r == 0:
        return np.zeros((A.shape[i], 0))
    # Trailing mode carries the column index from here on
    T = A.data @ factors[-1] if i != A.order - 1 else A.data[..., None] * np.ones(r)
    for t in range(A.order - 2, i, -1):
        T = np.einsum("...aj,aj->...j", T, factors[t])
    for t in range(i):
        T = np.einsum("a...j,aj->...j", T, factors[t])
    return T


def multilinear_transform(A: DenseTensor, M: Sequence[np.ndarray]) -> DenseTensor:
    """(M_1^T, ..., M_k^T) . A, entry [j_1..j_k] = <A, M_1[:, j_1] x ... x M_k[:, j_k]>."""
    if len(M) != A.order:
        raise InputError(f"expected {A.order} matrices, got {len(M)}")
    T = A.data
    for t, (n, Mt) in enumerate(zip(A.shape, M)):
        Mt = np.asarray(Mt, dtype=np.float64)
        if Mt.ndim != 2 or Mt.shape[0] != n:
            raise InputError(f"matrix {t} has shape {Mt.shape}, expected ({n}, r)")
        # Contract the leading axis; the new axis goes last, so after k steps
        # the modes are back in order.
        T = np.tensordot(T, Mt, axes=([0], [0]))
    return DenseTensor(data=T)


def diag_k(T: DenseTensor) -> np.ndarray:
    """Diagonal (T[j, ..., j])_j of a cubical tensor."""
    r = T.shape[0]
    if any(n != r for n in T.shape):
        raise InputError(f"diag_k needs a cubical tensor, got shape {T.shape}")
    idx = np.arange(r)
    return T.data[(idx,) * T.order].copy()


def rank1_sum(U: FactorSet) -> DenseTensor:
    """psi(U, lambda) = sum_j lambda_j u^(1)_j x ... x u^(k)_j"""
    T = U.factors[0] * U.lam
    for F in U.factors[1:]:
        T = T[..., None, :] * F
    return DenseTensor(data=T.sum(axis=-1))


def frobenius(A: DenseTensor) -> float:
    return float(np.linalg.norm(A.data.ravel()))


def inner(A: DenseTensor, B: DenseTensor) -> float:
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(A.data.ravel() @ B.data.ravel())


def difference(A: DenseTensor, B: DenseTensor) -> DenseTensor:
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    return DenseTensor(data=A.data - B.data)
