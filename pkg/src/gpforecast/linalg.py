"""Dense symmetric positive-definite linear algebra for exact GP inference.

Everything here goes through a Cholesky factor; no explicit inverse is ever
formed. Factorization failures are retried on an escalating diagonal jitter
ladder scaled by the mean of the diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor ``L`` with ``L @ L.T == A + jitter_used * I``."""

    lower: np.ndarray
    jitter_used: float = 0.0

    @property
    def order(self) -> int:
        return self.lower.shape[0]


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise DimensionMismatch("matrix order must be at least 1")
    return A


def check_symmetric(A, rtol: float = 1e-12) -> np.ndarray:
    """Validate a symmetric matrix with finite entries and return it as floats."""
    A = _as_square(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.max(np.abs(A)), 1.0)
    if np.max(np.abs(A - A.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return A


def cholesky(A, max_jitter: float | None = None) -> CholeskyFactor:
    """Factor a symmetric matrix, adding the smallest ladder jitter that works.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric matrix. Only the lower triangle is read.
    max_jitter : float, optional
        Largest absolute diagonal boost allowed. Defaults to the top of the
        ladder, ``1e-4 * mean(diag(A))``.

    Raises
    ------
    NotPositiveDefinite
        If no admissible ladder value yields a factorization.
    """
    A = _as_square(A)
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    n = A.shape[0]
    scale = float(np.mean(np.diag(A)))
    if max_jitter is None:
        max_jitter = JITTER_LADDER[-1] * abs(scale)
    if max_jitter < 0:
        raise ValueError("max_jitter must be nonnegative")
    for step in JITTER_LADDER:
        jitter = step * scale
        if jitter < 0 or jitter > max_jitter:
            continue
        try:
            L = scipy.linalg.cholesky(A + jitter * np.eye(n), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        # LAPACK can return a factor with a zero pivot on singular input
        if np.all(np.diag(L) > 0) and np.all(np.isfinite(L)):
            return CholeskyFactor(L, float(jitter))
    raise NotPositiveDefinite(
        f"matrix of order {n} is not positive definite within jitter {max_jitter:g}"
    )


def _check_rhs(L: CholeskyFactor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.order:
        raise DimensionMismatch(f"right-hand side has length {b.shape[0]}, factor order {L.order}")
    return b


def solve_lower(L: CholeskyFactor, b) -> np.ndarray:
    """Forward substitution: return ``x`` with ``L x = b``."""
    b = _check_rhs(L, b)
    return scipy.linalg.solve_triangular(L.lower, b, lower=True, check_finite=False)


def solve_upper(L: CholeskyFactor, b) -> np.ndarray:
    """Back substitution with the transposed factor: ``L.T x = b``."""
    b = _check_rhs(L, b)
    return scipy.linalg.solve_triangular(L.lower, b, lower=True, trans="T", check_finite=False)


def solve_system(L: CholeskyFactor, b) -> np.ndarray:
    """Return ``x`` with ``(L L^T) x = b`` via two triangular solves."""
    return solve_upper(L, solve_lower(L, b))


def log_det(L: CholeskyFactor) -> float:
    """Log-determinant of ``L L^T``."""
    return 2.0 * float(np.sum(np.log(np.diag(L.lower))))
