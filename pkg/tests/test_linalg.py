import numpy as np
import pytest
import scipy.sparse as sp

from biotlab.errors import NotSPD, SingularMatrix, TooLarge
from biotlab.linalg import Factorization, generalized_symmetric_eig
from biotlab.stepper import step_matrix

from conftest import column_system, square_system


def test_small_solves():
    np.testing.assert_allclose(Factorization(sp.eye(3)).solve(np.arange(3.0)), np.arange(3.0))
    np.testing.assert_allclose(Factorization(np.array([[2.0, 1.0], [1.0, 2.0]])).solve([3.0, 3.0]), [1.0, 1.0])


def test_multiple_right_hand_sides(rng):
    A = sp.random(30, 30, density=0.2, random_state=3) + 5 * sp.eye(30)
    F = Factorization(A)
    B = rng.standard_normal((30, 4))
    np.testing.assert_allclose(A @ F.solve(B), B, atol=1e-12)


@pytest.mark.parametrize("build", [lambda: column_system(4), lambda: square_system(2)])
def test_step_matrix_residual(build, rng):
    S = step_matrix(build(), 1e-3)
    b = rng.standard_normal(S.shape[0])
    x = Factorization(S).solve(b)
    # normwise backward error; the blocks differ in scale by ten decades
    scale = sp.linalg.norm(S, np.inf) * np.abs(x).max() + np.abs(b).max()
    assert np.abs(S @ x - b).max() <= 1e-10 * scale


def test_singular_matrix_reports_pivot():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrix):
        Factorization(A)
    with pytest.raises(SingularMatrix) as info:
        Factorization(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert info.value.pivot == 1


def test_generalized_eigenvalues():
    np.testing.assert_allclose(generalized_symmetric_eig(np.eye(2), np.eye(2)), [1, 1])
    np.testing.assert_allclose(generalized_symmetric_eig(np.diag([1.0, 4.0]), np.diag([1.0, 2.0])), [1, 2])


def test_stiffness_mass_pencil_hand_computed():
    # P1 on (0,1), n=2, Dirichlet at 0: free nodes 0.5 and 1
    K = np.array([[4.0, -2.0], [-2.0, 2.0]])
    M = np.array([[1 / 3, 1 / 12], [1 / 12, 1 / 6]])
    # det(K - l M) = 0 as a quadratic in l
    a = np.linalg.det(M)
    b = -(K[0, 0] * M[1, 1] + K[1, 1] * M[0, 0] - 2 * K[0, 1] * M[0, 1])
    c = np.linalg.det(K)
    roots = np.sort(np.roots([a, b, c]))
    np.testing.assert_allclose(generalized_symmetric_eig(K, M), roots, rtol=1e-12)


def test_eig_guards():
    with pytest.raises(NotSPD):
        generalized_symmetric_eig(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(TooLarge):
        generalized_symmetric_eig(np.eye(5), np.eye(5), limit=4)
