"""Hyper-parameter selection criteria and their oracle/limit counterparts.

All data-driven criteria are evaluated through n-dimensional identities
(Cholesky factorizations of Phi^T Phi + sigma2 P^{-1} and of P itself);
the N-by-N output covariance Q = Phi P Phi^T + sigma2 I is never formed
outside the dense reference implementations kept for cross-checking.

Criterion ids
-------------
``eb``                 negative log marginal likelihood of the outputs
``sure_y``             unbiased estimate of the output-prediction risk
``oracle_eb``          expectation of the eb criterion given the true parameter
``oracle_mse_y``       exact output-prediction risk given the true parameter
``limit_eb``           large-sample limit of the normalized eb criterion
``limit_sure_y``       large-sample limit of the normalized sure_y criterion
``normalized_eb``      eb shifted by data-only terms so it has a finite limit
``normalized_sure_y``  sure_y recentred and scaled by N, likewise
"""

from functools import cached_property

import numpy as np

from .exceptions import InvalidConfig
from .kernels import make_family
from .linalg import chol_pd, logdet_factored, solve_factored, symmetrize
from .validation import as_vector, check_regression_pair

COST_KINDS = (
    "eb",
    "sure_y",
    "oracle_eb",
    "oracle_mse_y",
    "limit_eb",
    "limit_sure_y",
    "normalized_eb",
    "normalized_sure_y",
)

LIMIT_COSTS = ("limit_eb", "limit_sure_y")


class CostContext:
    """Precomputed data sufficient statistics for repeated cost evaluation.

    Only the n-by-n Gram matrix, Phi^T Y and Y^T Y are touched per
    evaluation, so a tuning run costs O(n^3) per candidate independent of N.
    The oracle and limit criteria additionally need ``theta0`` (and
    ``Sigma`` for the limit of sure_y), which are optional here and pulled
    from a synthetic problem automatically by :meth:`from_problem`.
    """

    def __init__(self, X, y, sigma2, family, *, theta0=None, Sigma=None, gram=None):
        X, y = check_regression_pair(X, y)
        if sigma2 is None or sigma2 <= 0.0:
            raise InvalidConfig(f"sigma2 must be a known positive variance, got {sigma2}")
        if family.n != X.shape[1]:
            raise InvalidConfig(
                f"kernel family is for order {family.n}, data has {X.shape[1]} columns"
            )
        self.family = family
        self.N, self.n = X.shape
        self.sigma2 = float(sigma2)
        self.gram = symmetrize(X.T @ X, rtol=np.inf) if gram is None else gram
        self.phi_t_y = X.T @ y
        self.yty = float(y @ y)
        self.theta0 = None if theta0 is None else as_vector(theta0, "theta0", self.n)
        self.Sigma = None if Sigma is None else symmetrize(Sigma)

    @classmethod
    def from_problem(cls, problem, family):
        return cls(
            problem.Phi,
            problem.Y,
            problem.sigma2,
            family,
            theta0=problem.theta0,
            Sigma=problem.Sigma,
            gram=problem.gram,
        )

    # -- cached data-only pieces -----------------------------------------

    @cached_property
    def _gram_factor(self):
        return chol_pd(self.gram)

    @cached_property
    def theta_ls(self):
        return solve_factored(self._gram_factor, self.phi_t_y)

    @cached_property
    def gram_inv(self):
        return symmetrize(
            solve_factored(self._gram_factor, np.eye(self.n)), rtol=np.inf
        )

    @cached_property
    def _signal(self):
        self._require_theta0()
        return self.gram @ self.theta0

    def _require_theta0(self):
        if self.theta0 is None:
            raise InvalidConfig("this criterion needs the true parameter (theta0)")

    def _require_sigma(self):
        if self.Sigma is None:
            raise InvalidConfig("this criterion needs the regressor covariance (Sigma)")

    @cached_property
    def _eye(self):
        return np.eye(self.n)

    def _kernel_pieces(self, eta):
        P = self.family.matrix(eta)
        p_factor = chol_pd(P)
        pinv = symmetrize(solve_factored(p_factor, self._eye), rtol=np.inf)
        R = self.gram + self.sigma2 * pinv
        r_factor = chol_pd(R)
        return P, p_factor, pinv, R, r_factor

    def _logdet_q(self, p_factor, r_factor):
        # det Q factorizes over the n-dimensional pieces
        return (
            (self.N - self.n) * np.log(self.sigma2)
            + logdet_factored(r_factor)
            + logdet_factored(p_factor)
        )

    # -- data criteria ----------------------------------------------------

    def eb(self, eta):
        """Y^T Q^{-1} Y + log det Q."""
        _, p_factor, _, _, r_factor = self._kernel_pieces(eta)
        theta = solve_factored(r_factor, self.phi_t_y)
        quad = (self.yty - float(self.phi_t_y @ theta)) / self.sigma2
        return quad + self._logdet_q(p_factor, r_factor)

    def sure_y(self, eta):
        """||Y - Phi theta_reg||^2 + 2 sigma2 tr((Phi^T Phi + sigma2 P^{-1})^{-1} Phi^T Phi)."""
        _, _, _, _, r_factor = self._kernel_pieces(eta)
        theta = solve_factored(r_factor, self.phi_t_y)
        rss = self.yty - 2.0 * float(self.phi_t_y @ theta) + float(theta @ (self.gram @ theta))
        trace = float(np.trace(solve_factored(r_factor, self.gram)))
        return rss + 2.0 * self.sigma2 * trace

    def oracle_eb(self, eta):
        """theta0^T Phi^T Q^{-1} Phi theta0 + sigma2 tr Q^{-1} + log det Q."""
        self._require_theta0()
        _, p_factor, _, _, r_factor = self._kernel_pieces(eta)
        # Phi^T Q^{-1} Phi = G R^{-1} P^{-1}, an exact cancellation-free form
        z = solve_factored(p_factor, self.theta0)
        quad = float(self._signal @ solve_factored(r_factor, z))
        tr_q_inv = (self.N - float(np.trace(solve_factored(r_factor, self.gram)))) / self.sigma2
        return quad + self.sigma2 * tr_q_inv + self._logdet_q(p_factor, r_factor)

    def oracle_mse_y(self, eta):
        """Exact output-prediction risk of the regularized estimator."""
        self._require_theta0()
        _, p_factor, _, _, r_factor = self._kernel_pieces(eta)
        s2 = self.sigma2
        z = solve_factored(p_factor, self.theta0)
        u = solve_factored(r_factor, z)
        # Phi^T Q^{-2} Phi = P^{-1} R^{-1} G R^{-1} P^{-1}
        quad = float(u @ (self.gram @ u))
        X = solve_factored(r_factor, self.gram)
        t1 = float(np.trace(X))
        t2 = float(np.sum(X * X.T))
        tr_q_inv = (self.N - t1) / s2
        tr_q_inv2 = (self.N - 2.0 * t1 + t2) / s2**2
        return s2**2 * quad + s2**3 * tr_q_inv2 - 2.0 * s2**2 * tr_q_inv + 2.0 * self.N * s2

    # -- normalized criteria ----------------------------------------------

    def _mid_matrix(self, eta):
        # S = P + sigma2 (Phi^T Phi)^{-1}, the n-by-n bridge to the limits
        P = self.family.matrix(eta)
        return P + self.sigma2 * self.gram_inv

    def normalized_eb(self, eta):
        """theta_ls^T S^{-1} theta_ls + log det S with S = P + sigma2 (Phi^T Phi)^{-1}."""
        s_factor = chol_pd(self._mid_matrix(eta))
        v = solve_factored(s_factor, self.theta_ls)
        return float(self.theta_ls @ v) + logdet_factored(s_factor)

    def normalized_sure_y(self, eta):
        """N sigma2^2 [theta_ls^T S^{-1} (Phi^T Phi)^{-1} S^{-1} theta_ls - 2 tr((Phi^T Phi)^{-1} S^{-1})]."""
        s_factor = chol_pd(self._mid_matrix(eta))
        u = solve_factored(s_factor, self.theta_ls)
        quad = float(u @ (self.gram_inv @ u))
        trace = float(np.trace(solve_factored(s_factor, self.gram_inv)))
        return self.N * self.sigma2**2 * (quad - 2.0 * trace)

    # -- limit criteria (no data) ------------------------------------------

    def limit_eb(self, eta):
        self._require_theta0()
        return limit_eb(self.family, eta, self.theta0)

    def limit_sure_y(self, eta):
        self._require_theta0()
        self._require_sigma()
        return limit_sure_y(self.family, eta, self.theta0, self.Sigma, self.sigma2)

    def cost(self, kind):
        """Return the bound method evaluating the named criterion."""
        if kind not in COST_KINDS:
            raise InvalidConfig(f"unknown cost kind {kind!r}; choose from {COST_KINDS}")
        return getattr(self, kind)


def limit_eb(family, eta, theta0):
    """theta0^T P^{-1} theta0 + log det P."""
    theta0 = as_vector(theta0, "theta0", family.n)
    p_factor = chol_pd(family.matrix(eta))
    z = solve_factored(p_factor, theta0)
    return float(theta0 @ z) + logdet_factored(p_factor)


def limit_sure_y(family, eta, theta0, Sigma, sigma2):
    """sigma2^2 [theta0^T P^{-1} Sigma^{-1} P^{-1} theta0 - 2 tr(Sigma^{-1} P^{-1})]."""
    theta0 = as_vector(theta0, "theta0", family.n)
    if sigma2 <= 0.0:
        raise InvalidConfig(f"sigma2 must be positive, got {sigma2}")
    Sigma = symmetrize(Sigma)
    p_factor = chol_pd(family.matrix(eta))
    z = solve_factored(p_factor, theta0)
    sig_factor = chol_pd(Sigma)
    quad = float(z @ solve_factored(sig_factor, z))
    pinv = symmetrize(solve_factored(p_factor, np.eye(family.n)), rtol=np.inf)
    trace = float(np.trace(solve_factored(sig_factor, pinv)))
    return sigma2**2 * (quad - 2.0 * trace)


# -- convenience wrappers over synthetic problems -------------------------


def cost_eb(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).eb(eta)


def cost_sure_y(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).sure_y(eta)


def cost_oracle_eb(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).oracle_eb(eta)


def cost_oracle_mse_y(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).oracle_mse_y(eta)


def cost_normalized_eb(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).normalized_eb(eta)


def cost_normalized_sure_y(problem, family, eta):
    return CostContext.from_problem(problem, _as_family(family, problem.n)).normalized_sure_y(eta)


def _as_family(family, n):
    if isinstance(family, str):
        return make_family(family, n)
    return family


# -- dense reference implementations (test oracles only) ------------------
#
# These build the N-by-N covariance explicitly and exist to cross-check the
# n-dimensional paths above on small instances.


def _dense_q(problem, P):
    return problem.Phi @ P @ problem.Phi.T + problem.sigma2 * np.eye(problem.N)


def _dense_eb(problem, P):
    Q = _dense_q(problem, P)
    sol = np.linalg.solve(Q, problem.Y)
    return float(problem.Y @ sol) + float(np.linalg.slogdet(Q)[1])


def _dense_sure_y(problem, P):
    Q = _dense_q(problem, P)
    theta = P @ problem.Phi.T @ np.linalg.solve(Q, problem.Y)
    rss = float(np.sum((problem.Y - problem.Phi @ theta) ** 2))
    trace = float(np.trace(problem.Phi @ P @ problem.Phi.T @ np.linalg.inv(Q)))
    return rss + 2.0 * problem.sigma2 * trace


def _dense_oracle_eb(problem, P):
    Q = _dense_q(problem, P)
    Qi = np.linalg.inv(Q)
    f = problem.Phi @ problem.theta0
    return (
        float(f @ Qi @ f)
        + problem.sigma2 * float(np.trace(Qi))
        + float(np.linalg.slogdet(Q)[1])
    )


def _dense_oracle_mse_y(problem, P):
    Q = _dense_q(problem, P)
    Qi = np.linalg.inv(Q)
    s2 = problem.sigma2
    f = problem.Phi @ problem.theta0
    return (
        s2**2 * float(f @ Qi @ Qi @ f)
        + s2**3 * float(np.trace(Qi @ Qi))
        - 2.0 * s2**2 * float(np.trace(Qi))
        + 2.0 * problem.N * s2
    )
