"""Linear algebra over column submatrices ``A_J``.

Projections and least squares go through a thin QR factorisation with
column pivoting; Gram matrices are never inverted explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import RankDeficientError, ShapeMismatchError
from .model import MeasurementMatrix

#: Default relative rank tolerance on singular values.
RANK_TOL = 1e-10

SupportSet = tuple[int, ...]


def entries_of(A) -> np.ndarray:
    if isinstance(A, MeasurementMatrix):
        return A.entries
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D matrix, got shape {A.shape}")
    return A


def as_support(indices, m: int | None = None) -> SupportSet:
    """Validate ``indices`` as a strictly increasing index set in ``[0, m)``.

    Tuples order lexicographically, which is the tie-break order used by the
    decoder.
    """
    J = tuple(int(i) for i in indices)
    if any(b <= a for a, b in zip(J, J[1:])):
        raise ValueError(f"support must be strictly increasing, got {J}")
    if J and (J[0] < 0 or (m is not None and J[-1] >= m)):
        raise IndexError(f"support {J} out of range for {m} columns")
    return J


@dataclass(frozen=True)
class EigSummary:
    lambda_min: float
    lambda_max: float


def submatrix(A, J) -> np.ndarray:
    A = entries_of(A)
    J = as_support(J, A.shape[1])
    return A[:, list(J)]


def numeric_rank_full(A, J, tol: float = RANK_TOL) -> bool:
    """True iff ``A_J`` has full column rank: ``s_min > tol * s_max``."""
    AJ = submatrix(A, J)
    n, k = AJ.shape
    if k > n:
        return False
    if k == 0:
        return True
    s = np.linalg.svd(AJ, compute_uv=False)
    return bool(s[-1] > tol * s[0])


def _qr(A, J, tol: float):
    AJ = submatrix(A, J)
    if AJ.shape[1] > AJ.shape[0]:
        raise RankDeficientError(f"|J| = {AJ.shape[1]} exceeds n = {AJ.shape[0]}")
    Q, R, piv = sla.qr(AJ, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size and not d[-1] > tol * d[0]:
        raise RankDeficientError(f"A_J is rank deficient at tolerance {tol} for J = {tuple(J)}")
    return Q, R, piv


def _vector(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ShapeMismatchError(f"vector has shape {y.shape}, expected ({n},)")
    return y


def residual_vector(A, J, y, tol: float = RANK_TOL) -> np.ndarray:
    """Return the component of ``y`` orthogonal to ``span(A_J)``."""
    y = _vector(y, entries_of(A).shape[0])
    if len(J) == 0:
        return y.copy()
    Q, _, _ = _qr(A, J, tol)
    return y - Q @ (Q.T @ y)


def residual_sq_norm(A, J, y, tol: float = RANK_TOL) -> float:
    r = residual_vector(A, J, y, tol)
    return float(r @ r)


def ls_on_support(A, J, y, tol: float = RANK_TOL) -> np.ndarray:
    """Least-squares coefficients of ``y`` on the columns ``A_J`` (in ``J`` order)."""
    y = _vector(y, entries_of(A).shape[0])
    Q, R, piv = _qr(A, J, tol)
    c = np.empty(len(J))
    c[piv] = sla.solve_triangular(R, Q.T @ y)
    return c


def trace_inverse_gram(A, J, tol: float = RANK_TOL) -> float:
    """``Tr((A_J^T A_J)^{-1})``, computed as ``||R^{-1}||_F^2``."""
    _, R, _ = _qr(A, J, tol)
    Rinv = sla.solve_triangular(R, np.eye(R.shape[0]))
    return float(np.sum(Rinv**2))


def extreme_eigs_gram(A, K) -> EigSummary:
    """Extreme eigenvalues of ``(1/N) A_K^T A_K`` via singular values of ``A_K``."""
    AK = submatrix(A, K)
    n, k = AK.shape
    if k < 1:
        raise ValueError("K must be non-empty")
    s = np.linalg.svd(AK, compute_uv=False)
    lam = s**2 / n
    lam_min = float(lam[-1]) if k <= n else 0.0
    return EigSummary(lambda_min=lam_min, lambda_max=float(lam[0]))
