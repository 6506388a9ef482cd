import numpy as np
import pytest
from numpy.testing import assert_allclose

from ebsure.exceptions import NotPositiveDefinite
from ebsure.linalg import (
    cholesky_inverse,
    cholesky_solve,
    cond_number,
    eigen_sym,
    fro_inverse_bound,
    frob_norm,
    logdet_pd,
    rank_by_svd,
    symmetrize,
)


def random_spd(n, rng, cond=50.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1.0, 1.0 / cond, n)
    return symmetrize(Q @ np.diag(w) @ Q.T, rtol=np.inf)


def test_cholesky_solve_identity():
    X = cholesky_solve(np.eye(2), np.array([1.0, 2.0]))
    assert_allclose(X, [1.0, 2.0])


def test_cholesky_solve_scalar():
    assert_allclose(cholesky_solve(np.array([[4.0]]), np.array([[2.0]])), [[0.5]])


def test_cholesky_solve_matches_explicit_inverse():
    rng = np.random.default_rng(0)
    A = random_spd(5, rng)
    B = rng.standard_normal((5, 3))
    X = cholesky_solve(A, B)
    expected = np.linalg.inv(A) @ B  # explicit-inverse oracle
    assert np.linalg.norm(X - expected) <= 1e-8 * np.linalg.norm(expected)


def test_cholesky_solve_residual_contract():
    rng = np.random.default_rng(1)
    for _ in range(20):
        A = random_spd(6, rng)
        b = rng.standard_normal(6)
        x = cholesky_solve(A, b)
        assert np.linalg.norm(A @ x - b) <= 1e-10 * max(1.0, np.linalg.norm(b))


def test_not_positive_definite_raises():
    with pytest.raises(NotPositiveDefinite):
        cholesky_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


def test_pivot_cutoff_is_scale_aware():
    # eigenvalue 1e-13 relative to trace/dim triggers the cutoff
    A = np.diag([1.0, 1e-14])
    with pytest.raises(NotPositiveDefinite):
        cholesky_solve(A, np.eye(2))


def test_logdet_identity_and_diagonal():
    assert logdet_pd(np.eye(3)) == pytest.approx(0.0, abs=1e-15)
    assert logdet_pd(np.diag([2.0, 8.0])) == pytest.approx(np.log(16.0), abs=1e-12)
    assert logdet_pd(np.diag([2.0, 8.0])) == pytest.approx(2.7725887, abs=1e-6)


def test_logdet_matches_eigenvalue_oracle():
    rng = np.random.default_rng(2)
    A = random_spd(6, rng)
    w, _ = eigen_sym(A)
    assert logdet_pd(A) == pytest.approx(np.sum(np.log(w)), abs=1e-9)


def test_logdet_eigen_agreement_up_to_dim_50():
    rng = np.random.default_rng(3)
    for n in (2, 10, 50):
        A = random_spd(n, rng, cond=1e3)
        w, _ = eigen_sym(A)
        assert logdet_pd(A) == pytest.approx(np.sum(np.log(w)), abs=1e-9)


def test_eigen_sym_diagonal():
    w, U = eigen_sym(np.diag([3.0, 1.0]))
    assert_allclose(w, [3.0, 1.0])
    assert_allclose(np.abs(U), np.eye(2), atol=1e-14)


def test_eigen_sym_known_spectrum():
    w, _ = eigen_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert_allclose(w, [1.0, -1.0], atol=1e-14)


def test_eigen_sym_reconstruction():
    rng = np.random.default_rng(4)
    for _ in range(10):
        A = random_spd(7, rng)
        w, U = eigen_sym(A)
        assert np.all(np.diff(w) <= 0)
        assert np.all(w > 0)
        recon = U @ np.diag(w) @ U.T
        assert np.linalg.norm(recon - A) <= 1e-9 * np.linalg.norm(A)


def test_cond_number():
    assert cond_number(np.eye(4)) == pytest.approx(1.0)
    assert cond_number(np.diag([10.0, 0.1])) == pytest.approx(100.0, rel=1e-12)
    with pytest.raises(NotPositiveDefinite):
        cond_number(np.diag([1.0, -1.0]))


def test_fro_inverse_bound_tight_at_identity():
    assert fro_inverse_bound(np.eye(2)) == pytest.approx(np.sqrt(2.0))
    assert frob_norm(np.linalg.inv(np.eye(2))) == pytest.approx(np.sqrt(2.0))


def test_fro_inverse_bound_diagonal_arithmetic():
    A = np.diag([4.0, 2.0])
    assert frob_norm(np.linalg.inv(A)) == pytest.approx(np.sqrt(1 / 16 + 1 / 4))
    assert fro_inverse_bound(A) == pytest.approx(np.sqrt(2.0) * 2.0 / 4.0)


def test_fro_inverse_bound_dominates():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        A = random_spd(n, rng, cond=float(10 ** rng.uniform(0, 4)))
        assert fro_inverse_bound(A) >= frob_norm(np.linalg.inv(A))


def test_inverse_roundtrip():
    rng = np.random.default_rng(6)
    for _ in range(10):
        A = random_spd(5, rng, cond=100.0)
        ident = cholesky_inverse(A) @ A
        assert np.linalg.norm(ident - np.eye(5)) <= 1e-8 * cond_number(A)


def test_symmetrize_repairs_small_drift():
    A = np.array([[1.0, 0.5], [0.5 + 1e-14, 2.0]])
    S = symmetrize(A)
    assert S[0, 1] == S[1, 0]


def test_symmetrize_rejects_asymmetry():
    with pytest.raises(ValueError):
        symmetrize(np.array([[1.0, 0.5], [0.4, 2.0]]))


def test_rank_by_svd():
    assert rank_by_svd(np.zeros((3, 3))) == 0
    assert rank_by_svd(np.diag([1.0, 1e-3, 0.0])) == 2
    assert rank_by_svd(np.eye(4)) == 4
