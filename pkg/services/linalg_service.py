"""
Linalg Service - Small dense symmetric eigensolver.

This module provides the cyclic Jacobi eigendecomposition and the shifted
system solve used by the trust region subproblem. Matrices are tiny (one row
per input feature), so everything is dense and the Jacobi sweeps run over a
stack of matrices at once: one rotation angle per matrix, applied to the
whole stack in a single vectorized update.
"""

from dataclasses import dataclass

import numpy as np

from config import SolverConfig, debug_warning
from models.errors import InvalidInputError, PoleError


@dataclass(frozen=True)
class SymmetricMatrix:
    """
    Dense real symmetric matrix.

    Attributes:
        entries: n x n array, symmetric within SolverConfig.SYMMETRY_ATOL
    """
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries: np.ndarray = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidInputError(f"expected a non-empty square matrix, got shape {entries.shape}")
        if np.any(np.abs(entries - entries.T) > SolverConfig.SYMMETRY_ATOL):
            raise InvalidInputError("matrix is not symmetric")
        object.__setattr__(self, "entries", entries)

    @property
    def order(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """
    Eigendecomposition A = Q diag(d) Q^T.

    Attributes:
        Q: Orthogonal matrix whose columns are eigenvectors
        d: Eigenvalues sorted in descending order
    """
    Q: np.ndarray
    d: np.ndarray

    @property
    def d_max(self) -> float:
        return float(self.d[0])

    @property
    def order(self) -> int:
        return self.d.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return Q diag(d) Q^T."""
        return (self.Q * self.d) @ self.Q.T


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int, c: np.ndarray, s: np.ndarray) -> None:
    """Apply A <- P^T A P and V <- V P in place for a stack of plane rotations."""
    cc: np.ndarray = c[:, None]
    ss: np.ndarray = s[:, None]

    col_p: np.ndarray = A[:, :, p].copy()
    col_q: np.ndarray = A[:, :, q].copy()
    A[:, :, p] = cc * col_p - ss * col_q
    A[:, :, q] = ss * col_p + cc * col_q

    row_p: np.ndarray = A[:, p, :].copy()
    row_q: np.ndarray = A[:, q, :].copy()
    A[:, p, :] = cc * row_p - ss * row_q
    A[:, q, :] = ss * row_p + cc * row_q

    vec_p: np.ndarray = V[:, :, p].copy()
    vec_q: np.ndarray = V[:, :, q].copy()
    V[:, :, p] = cc * vec_p - ss * vec_q
    V[:, :, q] = ss * vec_p + cc * vec_q


def jacobi_eig_batch(
    stack: np.ndarray,
    rel_tol: float = SolverConfig.JACOBI_REL_TOL,
    max_sweeps: int = SolverConfig.JACOBI_MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """
    Diagonalize a stack of symmetric matrices with cyclic Jacobi rotations.

    Each matrix stops rotating once its off-diagonal Frobenius norm drops to
    rel_tol times its own Frobenius norm.

    Args:
        stack: Array of shape (k, n, n), each slice symmetric
        rel_tol: Relative off-diagonal threshold
        max_sweeps: Upper bound on full cyclic sweeps

    Returns:
        tuple: (d, Q) with d of shape (k, n) sorted descending per row and
            Q of shape (k, n, n) holding the matching eigenvectors as columns
    """
    A: np.ndarray = np.array(stack, dtype=float)
    if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[1] < 1:
        raise InvalidInputError(f"expected a (k, n, n) stack, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix entries must be finite")

    k, n, _ = A.shape
    V: np.ndarray = np.broadcast_to(np.eye(n), (k, n, n)).copy()
    upper: tuple[np.ndarray, np.ndarray] = np.triu_indices(n, 1)
    threshold: np.ndarray = rel_tol * np.sqrt(np.sum(A * A, axis=(1, 2)))

    active: np.ndarray = np.zeros(k, dtype=bool)
    for _ in range(max_sweeps):
        off: np.ndarray = np.sqrt(2.0 * np.sum(A[:, upper[0], upper[1]] ** 2, axis=1))
        active = off > threshold
        if not active.any():
            break

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq: np.ndarray = A[:, p, q]
                rotate: np.ndarray = active & (apq != 0.0)
                if not rotate.any():
                    continue
                theta: np.ndarray = np.where(
                    rotate,
                    (A[:, q, q] - A[:, p, p]) / (2.0 * np.where(rotate, apq, 1.0)),
                    0.0
                )
                sign: np.ndarray = np.where(theta >= 0.0, 1.0, -1.0)
                # hypot keeps theta**2 from overflowing for nearly-diagonal pairs
                t: np.ndarray = np.where(rotate, sign / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
                c: np.ndarray = 1.0 / np.sqrt(1.0 + t * t)
                _rotate(A, V, p, q, c, t * c)
    else:
        off = np.sqrt(2.0 * np.sum(A[:, upper[0], upper[1]] ** 2, axis=1))
        if np.any(off > threshold):
            debug_warning(f"[Linalg] Jacobi stopped after {max_sweeps} sweeps on {int(np.sum(off > threshold))} matrices")

    d: np.ndarray = np.diagonal(A, axis1=1, axis2=2).copy()
    order: np.ndarray = np.argsort(-d, axis=1, kind="stable")
    d = np.take_along_axis(d, order, axis=1)
    Q: np.ndarray = np.take_along_axis(V, order[:, None, :], axis=2)
    return d, Q


def sym_eig(A: SymmetricMatrix) -> EigenDecomposition:
    """
    Eigendecomposition of a single symmetric matrix.

    Args:
        A: The matrix to decompose

    Returns:
        EigenDecomposition with eigenvalues sorted descending
    """
    d, Q = jacobi_eig_batch(A.entries[None, :, :])
    return EigenDecomposition(Q=Q[0], d=d[0])


def solve_shifted(E: EigenDecomposition, lam: float, g: np.ndarray) -> np.ndarray:
    """
    Solve (A - lam I) delta = -g through the eigendecomposition of A.

    Args:
        E: Eigendecomposition of A
        lam: Shift, must not coincide with an eigenvalue
        g: Right-hand side vector

    Returns:
        np.ndarray: delta = -Q (D - lam I)^-1 Q^T g
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (E.order,):
        raise InvalidInputError(f"vector of length {E.order} expected, got shape {g.shape}")

    gap: np.ndarray = E.d - lam
    if np.any(np.abs(gap) <= SolverConfig.POLE_ATOL):
        raise PoleError(f"shift {lam!r} coincides with an eigenvalue")

    return shifted_solve_rows(E.Q[None, :, :], (E.Q.T @ g)[None, :], gap[None, :])[0]


def shifted_solve_rows(Q: np.ndarray, c: np.ndarray, gap: np.ndarray) -> np.ndarray:
    """-Q[k] (c[k] / gap[k]) for every row k, with c = Q^T g and gap = d - lam."""
    return -np.einsum("kij,kj->ki", Q, c / gap)
