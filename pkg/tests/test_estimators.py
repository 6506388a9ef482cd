import numpy as np
import pytest
from numpy.testing import assert_allclose

from ebsure.estimators import (
    fit_g,
    fit_matrix,
    fit_y,
    ls_estimate,
    mse_g_mc,
    mse_y_mc,
    rls_estimate,
)
from ebsure.exceptions import DegenerateReference, InvalidConfig
from ebsure.problems import GenConfig, RegressionProblem, sample_problem


def make_problem(Phi, Y, theta0, sigma2=1.0):
    n = Phi.shape[1]
    return RegressionProblem(Phi=Phi, Y=Y, theta0=theta0, sigma2=sigma2, Sigma=np.eye(n))


def test_ls_identity():
    # square identity regressors padded with a zero row to keep N > n
    Phi = np.vstack([np.eye(2), np.zeros((1, 2))])
    problem = make_problem(Phi, np.array([1.0, 2.0, 0.0]), np.array([1.0, 2.0]))
    assert_allclose(ls_estimate(problem).theta, [1.0, 2.0], atol=1e-12)


def test_ls_noise_free_recovery():
    rng = np.random.default_rng(0)
    Phi = rng.standard_normal((30, 4))
    theta0 = rng.standard_normal(4)
    problem = make_problem(Phi, Phi @ theta0, theta0)
    assert np.abs(ls_estimate(problem).theta - theta0).max() <= 1e-9


def test_ls_matches_explicit_inverse_oracle():
    rng = np.random.default_rng(1)
    Phi = rng.standard_normal((30, 4))
    theta0 = rng.standard_normal(4)
    Y = Phi @ theta0 + rng.standard_normal(30)
    problem = make_problem(Phi, Y, theta0)
    expected = np.linalg.inv(Phi.T @ Phi) @ Phi.T @ Y
    assert np.abs(ls_estimate(problem).theta - expected).max() <= 1e-8


def test_ls_residual_orthogonality():
    rng = np.random.default_rng(2)
    Phi = rng.standard_normal((50, 5))
    Y = rng.standard_normal(50)
    problem = make_problem(Phi, Y, np.zeros(5))
    theta = ls_estimate(problem).theta
    resid = Phi.T @ (Y - Phi @ theta)
    assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(Phi.T @ Y)


def test_rls_scalar_formula():
    problem = make_problem(
        np.array([[1.0], [0.0]]), np.array([2.0, 0.0]), np.array([1.0]), sigma2=1.0
    )
    est = rls_estimate(problem, np.array([[1.0]]))
    assert est.theta[0] == pytest.approx(1.0)


def test_rls_vanishing_regularization_matches_ls():
    rng = np.random.default_rng(3)
    Phi = rng.standard_normal((40, 3))
    Y = rng.standard_normal(40)
    problem = make_problem(Phi, Y, np.zeros(3))
    theta_rls = rls_estimate(problem, 1e12 * np.eye(3)).theta
    theta_ls = ls_estimate(problem).theta
    assert np.linalg.norm(theta_rls - theta_ls) <= 1e-6 * np.linalg.norm(theta_ls)


def test_rls_two_formulas_agree():
    # n-by-n solve against the N-by-N form P Phi^T Q^{-1} Y
    rng = np.random.default_rng(4)
    cfg = GenConfig(n=4, N=25, cond_target=50.0, snr_target=3.0, seed=5)
    problem = sample_problem(cfg)
    A = rng.standard_normal((4, 4))
    P = A @ A.T + 0.5 * np.eye(4)
    theta_n = rls_estimate(problem, P).theta
    Q = problem.Phi @ P @ problem.Phi.T + problem.sigma2 * np.eye(problem.N)
    theta_N = P @ problem.Phi.T @ np.linalg.solve(Q, problem.Y)
    assert np.linalg.norm(theta_n - theta_N) <= 1e-8 * np.linalg.norm(theta_N)


def test_rls_ridge_shrinkage_monotone():
    cfg = GenConfig(n=4, N=40, cond_target=20.0, snr_target=3.0, seed=6)
    problem = sample_problem(cfg)
    norms = [
        np.linalg.norm(rls_estimate(problem, t * np.eye(4)).theta)
        for t in np.geomspace(1e-3, 1e3, 13)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))


def test_fit_g_perfect_and_zero():
    theta0 = np.array([1.0, 2.0, 4.0])
    assert fit_g(theta0, theta0) == pytest.approx(100.0)
    constant = np.full(3, theta0.mean())
    assert fit_g(constant, theta0) == pytest.approx(0.0)


def test_fit_g_matches_direct_formula():
    rng = np.random.default_rng(7)
    theta0 = rng.standard_normal(6)
    theta = rng.standard_normal(6)
    expected = 100.0 * (
        1.0 - np.linalg.norm(theta - theta0) / np.linalg.norm(theta0 - theta0.mean())
    )
    assert fit_g(theta, theta0) == pytest.approx(expected, abs=1e-12)


def test_fit_g_degenerate_reference():
    with pytest.raises(DegenerateReference):
        fit_g(np.array([1.0, 2.0]), np.array([3.0, 3.0]))


def test_fit_y_matches_direct_formula():
    cfg = GenConfig(n=3, N=30, cond_target=5.0, snr_target=4.0, seed=8)
    problem = sample_problem(cfg)
    rng = np.random.default_rng(9)
    v_star = np.sqrt(problem.sigma2) * rng.standard_normal(problem.N)
    theta = rng.standard_normal(3)
    y_star = problem.Phi @ problem.theta0 + v_star
    expected = 100.0 * (
        1.0
        - np.linalg.norm(problem.Phi @ theta - y_star)
        / np.linalg.norm(y_star - y_star.mean())
    )
    assert fit_y(theta, problem, v_star) == pytest.approx(expected, abs=1e-12)


def test_fit_matrix_perfect():
    T = np.array([[1.0, 0.2], [0.2, 3.0]])
    assert fit_matrix(T, T) == pytest.approx(100.0)


def test_mse_g_zero_noise_limit():
    cfg = GenConfig(n=3, N=60, cond_target=5.0, snr_target=4.0, seed=10)
    base = sample_problem(cfg)
    problem = RegressionProblem(
        Phi=base.Phi, Y=base.Phi @ base.theta0, theta0=base.theta0,
        sigma2=1e-18, Sigma=base.Sigma,
    )
    est = mse_g_mc(lambda p: ls_estimate(p).theta, problem, replicates=10, seed=0)
    assert est.value <= 1e-12


def test_mse_closed_forms_quick():
    # reduced-replicate version of the LS closed-form checks
    cfg = GenConfig(n=4, N=80, cond_target=30.0, snr_target=5.0, seed=11)
    problem = sample_problem(cfg)
    rule = lambda p: ls_estimate(p).theta
    est_g = mse_g_mc(rule, problem, replicates=400, seed=1)
    expected_g = problem.sigma2 * np.trace(np.linalg.inv(problem.gram))
    assert abs(est_g.value - expected_g) <= 4.0 * est_g.stderr
    est_y = mse_y_mc(rule, problem, replicates=400, seed=2)
    expected_y = (problem.N + problem.n) * problem.sigma2
    assert abs(est_y.value - expected_y) <= 4.0 * est_y.stderr


def test_mse_requires_two_replicates():
    cfg = GenConfig(n=2, N=20, seed=12)
    problem = sample_problem(cfg)
    with pytest.raises(InvalidConfig):
        mse_g_mc(lambda p: ls_estimate(p).theta, problem, replicates=1)
