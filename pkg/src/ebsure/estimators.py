"""Least squares and regularized least squares, with fit and risk metrics."""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateReference,
    InvalidConfig,
    NotPositiveDefinite,
    RankDeficient,
)
from .linalg import chol_pd, cholesky_solve, solve_factored, symmetrize
from .validation import as_vector

_REFERENCE_FLOOR = 1e-14


@dataclass(frozen=True)
class Estimate:
    theta: np.ndarray
    method: str  # "ls" or "rls"
    eta: np.ndarray | None = None


def ls_estimate(problem):
    """Ordinary least squares via Cholesky on the normal equations."""
    try:
        theta = cholesky_solve(problem.gram, problem.Phi.T @ problem.Y)
    except NotPositiveDefinite as exc:
        raise RankDeficient(str(exc)) from None
    return Estimate(theta=theta, method="ls")


def rls_estimate(problem, P, eta=None):
    """Regularized least squares with prior covariance ``P``.

    Solves the n-by-n system (Phi^T Phi + sigma2 P^{-1}) theta = Phi^T Y;
    ``P`` must be positive definite.
    """
    P = symmetrize(P)
    pinv_factor = chol_pd(P)
    pinv = solve_factored(pinv_factor, np.eye(P.shape[0]))
    R = problem.gram + problem.sigma2 * symmetrize(pinv, rtol=np.inf)
    theta = cholesky_solve(R, problem.Phi.T @ problem.Y)
    return Estimate(theta=theta, method="rls", eta=None if eta is None else np.asarray(eta, float))


def fit_g(theta_hat, theta0):
    """100 * (1 - ||theta_hat - theta0|| / ||theta0 - mean(theta0)||)."""
    theta_hat = as_vector(theta_hat, name="theta_hat")
    theta0 = as_vector(theta0, name="theta0", length=theta_hat.shape[0])
    ref = np.linalg.norm(theta0 - theta0.mean())
    if ref < _REFERENCE_FLOOR:
        raise DegenerateReference(
            "theta0 is (numerically) constant; the fit reference norm vanishes"
        )
    return float(100.0 * (1.0 - np.linalg.norm(theta_hat - theta0) / ref))


def fit_y(theta_hat, problem, v_star):
    """Output-prediction fit against a fresh noisy copy of the output.

    ``v_star`` is an independent noise draw with the problem's variance;
    the reference is the fresh output centered at its own mean.
    """
    theta_hat = as_vector(theta_hat, name="theta_hat", length=problem.n)
    v_star = as_vector(v_star, name="v_star", length=problem.N)
    y_star = problem.Phi @ problem.theta0 + v_star
    ref = np.linalg.norm(y_star - y_star.mean())
    if ref < _REFERENCE_FLOOR:
        raise DegenerateReference("fresh output is numerically constant")
    resid = np.linalg.norm(problem.Phi @ theta_hat - y_star)
    return float(100.0 * (1.0 - resid / ref))


def fit_matrix(M, target):
    """Matrix analogue of the fit score, with a grand-mean-centered reference."""
    M = np.asarray(M, dtype=float)
    target = np.asarray(target, dtype=float)
    ref = np.linalg.norm(target - target.mean(), "fro")
    if ref < _REFERENCE_FLOOR:
        raise DegenerateReference("target matrix is numerically constant")
    return float(100.0 * (1.0 - np.linalg.norm(M - target, "fro") / ref))


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    replicates: int


def _mc_mean(samples):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / np.sqrt(samples.size)
    return MonteCarloEstimate(float(samples.mean()), float(se), samples.size)


def mse_g_mc(rule, problem, replicates, seed=0):
    """Monte Carlo estimate of E ||theta_hat - theta0||^2 over noise redraws.

    ``rule`` maps a problem to a parameter estimate (an ndarray).
    """
    if replicates < 2:
        raise InvalidConfig(f"replicates must be >= 2, got {replicates}")
    rng = np.random.default_rng(seed)
    sd = np.sqrt(problem.sigma2)
    losses = np.empty(replicates)
    for r in range(replicates):
        redrawn = problem.with_noise(sd * rng.standard_normal(problem.N))
        theta = rule(redrawn)
        losses[r] = np.sum((theta - problem.theta0) ** 2)
    return _mc_mean(losses)


def mse_y_mc(rule, problem, replicates, seed=0):
    """Monte Carlo estimate of E ||Phi theta0 + V* - Phi theta_hat||^2.

    V* is an independent copy of the noise, redrawn together with the
    fitting noise in every replicate.
    """
    if replicates < 2:
        raise InvalidConfig(f"replicates must be >= 2, got {replicates}")
    rng = np.random.default_rng(seed)
    sd = np.sqrt(problem.sigma2)
    f = problem.Phi @ problem.theta0
    losses = np.empty(replicates)
    for r in range(replicates):
        redrawn = problem.with_noise(sd * rng.standard_normal(problem.N))
        theta = rule(redrawn)
        v_star = sd * rng.standard_normal(problem.N)
        losses[r] = np.sum((f + v_star - problem.Phi @ theta) ** 2)
    return _mc_mean(losses)
