import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from eddymsfem.errors import SingularSystemError
from eddymsfem.linsolve import Factorization, solve_matrix


def residual_ok(A, x, b):
    A = sp.csr_matrix(A)
    r = np.max(np.abs(A @ x - b))
    norm_a = np.max(np.abs(A).sum(axis=1))
    return r <= 1e-10 * (norm_a * np.max(np.abs(x)) + np.max(np.abs(b)))


def test_identity(rng):
    b = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    np.testing.assert_array_equal(solve_matrix(sp.identity(7), b), b)


def test_two_by_two_hand_elimination():
    A = sp.csr_matrix(np.array([[1j, 1], [1, 1j]]))
    x = solve_matrix(A, np.array([1.0, 0.0]))
    # det = i*i - 1 = -2, so x = (i, -1) / -2
    np.testing.assert_allclose(x, [-0.5j, 0.5], atol=1e-15)
    np.testing.assert_allclose(A @ x, [1.0, 0.0], atol=1e-15)


def test_saddle_embedding_matches_dense(rng):
    n, m = 50, 12
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = M + M.T + 20 * np.eye(n)             # complex symmetric
    B = rng.standard_normal((m, n))
    K = np.block([[M, B.T], [B, np.zeros((m, m))]])
    b = rng.standard_normal(n + m) + 1j * rng.standard_normal(n + m)
    x = solve_matrix(sp.csr_matrix(K), b)
    np.testing.assert_allclose(x, scipy.linalg.solve(K, b), rtol=1e-9, atol=1e-9)
    assert residual_ok(K, x, b)


def test_singular_reports_pivot():
    A = sp.csr_matrix(np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 2.0]]))
    with pytest.raises(SingularSystemError) as info:
        Factorization(A)
    assert info.value.pivot == 1


def test_numerically_singular():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularSystemError):
        solve_matrix(A, np.array([1.0, 0.0]))


def test_factor_reuse_and_determinism(rng):
    A = sp.random(40, 40, density=0.2, random_state=3) + 5 * sp.identity(40)
    f = Factorization(A)
    b1, b2 = rng.standard_normal(40), rng.standard_normal(40)
    x1, x2 = f.solve(b1), f.solve(b2)
    assert residual_ok(A, x1, b1) and residual_ok(A, x2, b2)
    assert f.solve(b1).tobytes() == x1.tobytes()
    assert Factorization(A).solve(b1).tobytes() == x1.tobytes()
