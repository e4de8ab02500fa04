"""Dense symmetric/positive-definite helpers shared by the filter and solvers."""
from __future__ import annotations

import numpy as np
from scipy import linalg as sla


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetrize a square matrix: (M + M^T) / 2."""
    return 0.5 * (m + m.T)


def is_symmetric(m: np.ndarray, tol: float = 1e-9) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - m.T) <= tol))


def min_eigval(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(sym(m))[0])


def is_psd(m: np.ndarray, tol: float = 1e-10) -> bool:
    """Positive semidefinite up to -tol on the smallest eigenvalue."""
    return is_symmetric(m, tol=max(tol, 1e-9)) and min_eigval(m) >= -tol


def pd_cholesky(m: np.ndarray) -> np.ndarray:
    """Cholesky factor of a symmetric positive definite matrix.

    Raises ValueError if the matrix is not symmetric positive definite.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if not is_symmetric(m):
        raise ValueError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(sym(m))
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc


def pd_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    chol = pd_cholesky(m)
    inv = sla.cho_solve((chol, True), np.eye(m.shape[0]))
    return sym(inv)


def pd_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M x = b for symmetric positive definite M via Cholesky."""
    chol = pd_cholesky(m)
    return sla.cho_solve((chol, True), b)
