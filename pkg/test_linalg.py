"""
Tests for the Jacobi eigensolver and the shifted solve.
"""

import numpy as np
import pytest

from models.errors import InvalidInputError, PoleError
from services.linalg_service import (
    EigenDecomposition,
    SymmetricMatrix,
    jacobi_eig_batch,
    solve_shifted,
    sym_eig,
)


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def test_identity_has_unit_eigenvalues():
    E = sym_eig(SymmetricMatrix(np.eye(2)))
    np.testing.assert_allclose(E.d, [1.0, 1.0])
    np.testing.assert_allclose(E.Q.T @ E.Q, np.eye(2), atol=1e-14)


def test_diagonal_matrix_sorted_descending():
    E = sym_eig(SymmetricMatrix(np.diag([1.0, 3.0])))
    np.testing.assert_allclose(E.d, [3.0, 1.0])
    np.testing.assert_allclose(np.abs(E.Q), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)


def test_random_4x4_reconstruction(rng):
    A = _random_symmetric(rng, 4)
    E = sym_eig(SymmetricMatrix(A))
    assert np.max(np.abs(E.reconstruct() - A)) <= 1e-9
    np.testing.assert_allclose(E.Q.T @ E.Q, np.eye(4), atol=1e-12)
    assert np.all(np.diff(E.d) <= 0.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_matches_reference_eigenvalues(rng, n):
    A = _random_symmetric(rng, n)
    E = sym_eig(SymmetricMatrix(A))
    np.testing.assert_allclose(E.d, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-10)


def test_rank_one_spectrum():
    w = np.array([3.0, 4.0])
    E = sym_eig(SymmetricMatrix(0.25 * np.outer(w, w)))
    np.testing.assert_allclose(E.d, [6.25, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(E.Q[:, 0]), [0.6, 0.8], atol=1e-12)


def test_batch_equals_single_solves(rng):
    stack = np.stack([_random_symmetric(rng, 3) for _ in range(6)])
    d, Q = jacobi_eig_batch(stack)
    for k in range(stack.shape[0]):
        single = sym_eig(SymmetricMatrix(stack[k]))
        np.testing.assert_allclose(d[k], single.d, atol=1e-12)
        np.testing.assert_allclose((Q[k] * d[k]) @ Q[k].T, stack[k], atol=1e-10)


def test_zero_matrix_in_batch_is_left_alone():
    stack = np.stack([np.zeros((2, 2)), np.array([[2.0, 1.0], [1.0, 2.0]])])
    d, _ = jacobi_eig_batch(stack)
    np.testing.assert_allclose(d, [[0.0, 0.0], [3.0, 1.0]], atol=1e-12)


@pytest.mark.parametrize(
    "entries",
    [np.zeros((2, 3)), np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros((0, 0))],
)
def test_symmetric_matrix_rejects_bad_input(entries):
    with pytest.raises(InvalidInputError):
        SymmetricMatrix(entries)


def test_non_finite_stack_rejected():
    with pytest.raises(InvalidInputError):
        jacobi_eig_batch(np.array([[[np.nan, 0.0], [0.0, 1.0]]]))


def test_solve_shifted_scalar_division():
    E = sym_eig(SymmetricMatrix(np.zeros((2, 2))))
    np.testing.assert_allclose(solve_shifted(E, 2.0, np.array([1.0, 0.0])), [0.5, 0.0], atol=1e-15)


def test_solve_shifted_zero_rhs():
    E = sym_eig(SymmetricMatrix(np.diag([2.0, 1.0])))
    np.testing.assert_array_equal(solve_shifted(E, 4.0, np.zeros(2)), np.zeros(2))


def test_solve_shifted_diagonal():
    E = sym_eig(SymmetricMatrix(np.diag([2.0, 1.0])))
    np.testing.assert_allclose(solve_shifted(E, 4.0, np.array([1.0, 1.0])), [0.5, 1.0 / 3.0], atol=1e-14)


def test_solve_shifted_satisfies_system(rng):
    A = _random_symmetric(rng, 4)
    g = rng.standard_normal(4)
    E = sym_eig(SymmetricMatrix(A))
    lam = E.d_max + 1.5
    delta = solve_shifted(E, lam, g)
    np.testing.assert_allclose((A - lam * np.eye(4)) @ delta, -g, atol=1e-10)


def test_solve_shifted_pole():
    E = EigenDecomposition(Q=np.eye(2), d=np.array([2.0, 1.0]))
    with pytest.raises(PoleError):
        solve_shifted(E, 1.0, np.array([1.0, 1.0]))


def test_solve_shifted_length_mismatch():
    E = EigenDecomposition(Q=np.eye(2), d=np.array([2.0, 1.0]))
    with pytest.raises(InvalidInputError):
        solve_shifted(E, 4.0, np.ones(3))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_eigenvalues_invariant_under_permutation(rng, n):
    A = _random_symmetric(rng, n)
    P = np.eye(n)[rng.permutation(n)]
    original = sym_eig(SymmetricMatrix(A)).d
    permuted = sym_eig(SymmetricMatrix(P.T @ A @ P)).d
    np.testing.assert_allclose(permuted, original, atol=1e-10)


def test_shifted_norm_strictly_decreases_above_top_eigenvalue(rng):
    A = _random_symmetric(rng, 3)
    g = rng.standard_normal(3)
    E = sym_eig(SymmetricMatrix(A))
    assert abs((E.Q.T @ g)[0]) > 1e-6
    shifts = E.d_max + np.geomspace(1e-6, 1e3, 200)
    norms = np.array([np.linalg.norm(solve_shifted(E, lam, g)) for lam in shifts])
    assert np.all(np.diff(norms) < 0.0)
