"""Finite-sample bound terms, sandwich covariances and related utilities.

Two groups of results live here:

* Per-instance bound terms controlling how fast the normalized criteria
  approach their large-sample limits, together with a condition-number
  power sweep that regresses each term against cond(Phi^T Phi).
* The curvature/score ("sandwich") covariance matrices governing the
  asymptotic normality of the tuned hyper-parameters, with a closed-form
  ridge specialization used as a cross-check, plus expectation formulas
  for Gaussian quadratic and quartic forms.
"""

from dataclasses import dataclass

import numpy as np

from .costs import CostContext, limit_eb, limit_sure_y
from .exceptions import (
    DimensionMismatch,
    InsufficientSweep,
    InvalidConfig,
    NotPositiveDefinite,
    SingularHessian,
)
from .kernels import make_family
from .linalg import (
    chol_pd,
    cholesky_inverse,
    eigen_sym,
    frob_norm,
    rank_by_svd,
    solve_factored,
    sqrt_pd,
    symmetrize,
)
from .problems import RegressionProblem, make_covariance
from .validation import as_vector

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class EbBoundTerms:
    """Terms bounding |normalized eb criterion - its limit| on one instance."""

    e1b: float
    e2b: float
    e3b: float
    r1: int

    @property
    def total(self):
        return self.e1b + self.e2b + self.e3b


@dataclass(frozen=True)
class SyBoundTerms:
    """Terms bounding |normalized sure_y criterion - its limit| on one instance."""

    e1y: float
    e2y: float
    e3y: float
    e4y: float
    e5y: float
    r2: int
    delta_n: float

    @property
    def total(self):
        return self.e1y + self.e2y + self.e3y + self.e4y + self.e5y


class _InstanceNorms:
    """Shared spectral quantities of one (problem, kernel point) pair."""

    def __init__(self, problem, family, eta):
        self.problem = problem
        self.n = problem.n
        self.N = problem.N
        self.s2 = problem.sigma2
        G = problem.gram
        wg, _ = eigen_sym(G)
        if wg[-1] <= 0.0:
            raise NotPositiveDefinite("Phi^T Phi is not positive definite")
        self.gram_inv = cholesky_inverse(G)
        self.norm_gram_inv = float(np.sqrt(np.sum(1.0 / wg**2)))

        P = family.matrix(eta)
        self.wp, _ = eigen_sym(P)
        if self.wp[-1] <= 0.0:
            raise NotPositiveDefinite("kernel matrix is not positive definite")
        self.P = P
        self.norm_p_inv = float(np.sqrt(np.sum(1.0 / self.wp**2)))

        self.S = symmetrize(P + self.s2 * self.gram_inv, rtol=np.inf)
        ws, _ = eigen_sym(self.S)
        if ws[-1] <= 0.0:
            raise NotPositiveDefinite("P + sigma2 (Phi^T Phi)^{-1} is not positive definite")
        self.norm_s_inv = float(np.sqrt(np.sum(1.0 / ws**2)))

        self.theta0_norm = float(np.linalg.norm(problem.theta0))
        self.ptv_norm = float(np.linalg.norm(problem.Phi.T @ problem.noise))


def eb_bound_terms(problem, family, eta):
    """Evaluate the three eb-side bound terms on a synthetic instance."""
    family = _as_family(family, problem.n)
    q = _InstanceNorms(problem, family, eta)
    s2 = q.s2

    e1b = q.theta0_norm * q.ptv_norm * q.norm_gram_inv * (q.norm_s_inv + q.norm_p_inv)
    # trace of P and of P^{-1} are the squared Frobenius norms of P^{1/2}, P^{-1/2}
    tr_p = float(np.sum(q.wp))
    tr_p_inv = float(np.sum(1.0 / q.wp))
    root_p = sqrt_pd(q.P)
    s_inv = cholesky_inverse(q.S)
    r1 = rank_by_svd(np.eye(q.n) - root_p @ s_inv @ root_p, rtol=RANK_RTOL)
    e2b = q.norm_gram_inv * (
        q.norm_s_inv * (q.ptv_norm**2 * q.norm_gram_inv + s2 * q.theta0_norm**2 * q.norm_p_inv)
        + np.sqrt(r1) * s2 * max(q.norm_s_inv * q.norm_p_inv * tr_p, tr_p_inv)
    )
    e3b = s2 * q.theta0_norm * q.ptv_norm * q.norm_gram_inv**2 * q.norm_s_inv * q.norm_p_inv
    return EbBoundTerms(e1b=float(e1b), e2b=float(e2b), e3b=float(e3b), r1=r1)


def sy_bound_terms(problem, family, eta, delta_n=None):
    """Evaluate the five sure_y-side bound terms on a synthetic instance.

    ``delta_n`` is the rate at which Phi^T Phi / N approaches Sigma; for
    Gaussian regressor rows this is 1/sqrt(N), the default.  The terms use
    the raw Frobenius deviation ||Phi^T Phi / N - Sigma||_F directly.
    """
    family = _as_family(family, problem.n)
    q = _InstanceNorms(problem, family, eta)
    s2, N = q.s2, q.N
    if delta_n is None:
        delta_n = 1.0 / np.sqrt(N)
    if delta_n <= 0.0:
        raise InvalidConfig(f"delta_n must be positive, got {delta_n}")

    Sigma = problem.Sigma
    ws, _ = eigen_sym(Sigma)
    if ws[-1] <= 0.0:
        raise NotPositiveDefinite("Sigma is not positive definite")
    norm_sig_inv = float(np.sqrt(np.sum(1.0 / ws**2)))
    dev = frob_norm(problem.gram / N - Sigma)

    p_inv = cholesky_inverse(q.P)
    s_inv = cholesky_inverse(q.S)
    sig_inv = cholesky_inverse(Sigma)
    r2 = rank_by_svd(sig_inv @ p_inv - N * q.gram_inv @ s_inv, rtol=RANK_RTOL)

    nGi, nSi, nPi = q.norm_gram_inv, q.norm_s_inv, q.norm_p_inv
    th0, ptv = q.theta0_norm, q.ptv_norm

    e1y = s2**2 * th0 * ptv * nGi * (N * nGi * nSi**2 + norm_sig_inv * nPi**2)
    e2y = s2**2 * N * nGi * dev * norm_sig_inv * nPi * (th0**2 * nSi + 2.0 * np.sqrt(r2))
    e3y = s2**2 * nGi * nSi * (
        ptv**2 * N * nGi**2 * nSi
        + s2 * th0**2 * N * nGi * nSi * nPi
        + s2 * th0**2 * norm_sig_inv * nPi**2
        + 2.0 * np.sqrt(r2) * s2 * N * nGi * nPi
    )
    e4y = s2**3 * th0 * ptv * nGi**2 * nSi * nPi * (N * nGi * nSi + norm_sig_inv * nPi)
    e5y = s2**2 * th0 * ptv * N * nGi**2 * dev * norm_sig_inv * nSi * nPi
    return SyBoundTerms(
        e1y=float(e1y), e2y=float(e2y), e3y=float(e3y), e4y=float(e4y), e5y=float(e5y),
        r2=r2, delta_n=float(delta_n),
    )


@dataclass(frozen=True)
class BoundCheck:
    """One cost-gap inequality evaluated on one instance."""

    gap: float
    bound: float

    @property
    def holds(self):
        return self.gap <= self.bound


def check_eb_bound(problem, family, eta):
    """|normalized_eb - limit_eb| at eta versus the summed bound terms."""
    family = _as_family(family, problem.n)
    ctx = CostContext.from_problem(problem, family)
    gap = abs(ctx.normalized_eb(eta) - limit_eb(family, eta, problem.theta0))
    return BoundCheck(gap=float(gap), bound=eb_bound_terms(problem, family, eta).total)


def check_sy_bound(problem, family, eta):
    """|normalized_sure_y - limit_sure_y| at eta versus the summed bound terms."""
    family = _as_family(family, problem.n)
    ctx = CostContext.from_problem(problem, family)
    gap = abs(
        ctx.normalized_sure_y(eta)
        - limit_sure_y(family, eta, problem.theta0, problem.Sigma, problem.sigma2)
    )
    return BoundCheck(gap=float(gap), bound=sy_bound_terms(problem, family, eta).total)


# -- condition-number power sweep -----------------------------------------

# stated maximum powers of cond(Phi^T Phi) and cond(P) per term, with the
# in-probability rate each term carries
TERM_POWERS = {
    "e1b": ("eb", "1/sqrt(N)", 1, 1),
    "e2b": ("eb", "1/N", 2, 1),
    "e3b": ("eb", "1/N^(3/2)", 2, 1),
    "e1y": ("sure_y", "1/sqrt(N)", 2, 2),
    "e3y": ("sure_y", "1/N", 3, 2),
    "e4y": ("sure_y", "1/N^(3/2)", 3, 2),
    "e2y": ("sure_y", "delta_N", 2, 1),
    "e5y": ("sure_y", "delta_N/sqrt(N)", 3, 1),
}

_TERM_ORDER = ("e1b", "e2b", "e3b", "e1y", "e3y", "e4y", "e2y", "e5y")


@dataclass(frozen=True)
class CondPowerRow:
    term: str
    group: str
    rate: str
    stated_power_cond_gram: int
    stated_power_cond_kernel: int
    empirical_slope: float


def cond_sweep_problems(n, N, cond_levels, lambda1=1.0, snr_target=5.0, seed=0):
    """Instances sharing regressor directions, truth and noise across levels.

    One standard-normal matrix, one true parameter, one noise draw and one
    eigenbasis are reused for every condition level, so the only thing that
    changes along the sweep is the covariance spectrum.  The noise variance
    is fixed at the value solved on the first level.
    """
    cond_levels = [float(c) for c in cond_levels]
    if any(c < 1.0 for c in cond_levels):
        raise InvalidConfig("all condition levels must be >= 1")
    root = np.random.SeedSequence(seed)
    ss_z, ss_theta, ss_noise, ss_basis = root.spawn(4)
    Z = np.random.default_rng(ss_z).standard_normal((N, n))
    theta0 = np.random.default_rng(ss_theta).standard_normal(n)
    white = np.random.default_rng(ss_noise).standard_normal(N)

    problems = []
    sigma2 = None
    for cond in cond_levels:
        Sigma = make_covariance(n, cond, lambda1, ss_basis)
        w, U = eigen_sym(Sigma)
        Phi = Z @ (U @ (np.sqrt(w)[:, None] * U.T))
        f = Phi @ theta0
        if sigma2 is None:
            sigma2 = float(np.mean((f - f.mean()) ** 2) / snr_target)
        problems.append(
            RegressionProblem(
                Phi=Phi, Y=f + np.sqrt(sigma2) * white, theta0=theta0,
                sigma2=sigma2, Sigma=Sigma,
            )
        )
    return problems


def write_bound_terms_csv(path, rows):
    """One row per (seed, N, cond) instance, one column per bound term.

    ``rows`` are dicts with keys seed, N, cond plus any of the term names.
    """
    columns = ["seed", "N", "cond"] + list(_TERM_ORDER) + ["r1", "r2"]
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row.get(col, "")
            if isinstance(v, float):
                cells.append("%.17g" % v)
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_cond_power_csv(path, rows):
    lines = ["term,group,rate,stated_power_cond_gram,stated_power_cond_kernel,empirical_slope"]
    for r in rows:
        lines.append(
            f"{r.term},{r.group},{r.rate},{r.stated_power_cond_gram},"
            f"{r.stated_power_cond_kernel},{'%.17g' % r.empirical_slope}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cond_power_table(problems, family, eta):
    """Log-log slope of every bound term against the realized cond(Phi^T Phi).

    The slope is reported next to the stated maximum powers; with fixed
    kernel point the cond(P) column does not vary along the sweep.
    """
    if len(problems) < 4:
        raise InsufficientSweep(
            f"need at least 4 condition levels, got {len(problems)}"
        )
    family = _as_family(family, problems[0].n)
    conds = []
    values = {t: [] for t in _TERM_ORDER}
    for problem in problems:
        wg, _ = eigen_sym(problem.gram)
        conds.append(wg[0] / wg[-1])
        eb = eb_bound_terms(problem, family, eta)
        sy = sy_bound_terms(problem, family, eta)
        for t in ("e1b", "e2b", "e3b"):
            values[t].append(getattr(eb, t))
        for t in ("e1y", "e2y", "e3y", "e4y", "e5y"):
            values[t].append(getattr(sy, t))
    log_cond = np.log(np.asarray(conds))
    rows = []
    for t in _TERM_ORDER:
        group, rate, pow_gram, pow_kernel = TERM_POWERS[t]
        slope = float(np.polyfit(log_cond, np.log(np.asarray(values[t])), 1)[0])
        rows.append(
            CondPowerRow(
                term=t, group=group, rate=rate,
                stated_power_cond_gram=pow_gram,
                stated_power_cond_kernel=pow_kernel,
                empirical_slope=slope,
            )
        )
    return rows


# -- sandwich covariances ---------------------------------------------------


@dataclass(frozen=True)
class SandwichCov:
    """Asymptotic covariance curvature^{-1} score_cov curvature^{-1}."""

    curvature: np.ndarray
    score_cov: np.ndarray
    covariance: np.ndarray


def _sandwich(curvature, score_cov):
    try:
        half = np.linalg.solve(curvature, score_cov)
        cov = np.linalg.solve(curvature, half.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularHessian(str(exc)) from None
    if not np.all(np.isfinite(cov)):
        raise SingularHessian("curvature matrix is numerically singular")
    return SandwichCov(
        curvature=symmetrize(curvature, rtol=np.inf),
        score_cov=symmetrize(score_cov, rtol=np.inf),
        covariance=symmetrize(cov, rtol=np.inf),
    )


def sandwich_eb(family, eta_star, theta0, Sigma, sigma2):
    """Asymptotic covariance of the rescaled eb hyper-parameter error.

    Built element-wise from the kernel derivatives at the limit optimizer;
    the score covariance uses the inverse regressor covariance.
    """
    family, theta0, sig_factor = _sandwich_inputs(family, theta0, Sigma, sigma2)
    d = family.inv_derivatives(eta_star)
    grads = [family.grad(eta_star, k) for k in range(family.p)]
    p = family.p
    A = np.empty((p, p))
    B = np.empty((p, p))
    sig_inv_d1_theta = [solve_factored(sig_factor, m @ theta0) for m in d.first]
    for k in range(p):
        for l in range(p):
            A[k, l] = (
                float(theta0 @ (d.second[k, l] @ theta0))
                + float(np.sum(d.first[l] * grads[k].T))
                + float(np.sum(d.pinv * family.hess(eta_star, k, l).T))
            )
            B[k, l] = 4.0 * sigma2 * float((d.first[k] @ theta0) @ sig_inv_d1_theta[l])
    return _sandwich(A, B)


def sandwich_sure_y(family, eta_star, theta0, Sigma, sigma2):
    """Asymptotic covariance of the rescaled sure_y hyper-parameter error."""
    family, theta0, sig_factor = _sandwich_inputs(family, theta0, Sigma, sigma2)
    d = family.inv_derivatives(eta_star)
    p = family.p
    n = family.n
    sig_inv = solve_factored(sig_factor, np.eye(n))
    pinv_sig_inv = d.pinv @ sig_inv
    mixed = [pinv_sig_inv @ m + m @ pinv_sig_inv.T for m in d.first]
    mixed_theta = [m @ theta0 for m in mixed]
    first_theta = [m @ theta0 for m in d.first]
    C = np.empty((p, p))
    D = np.empty((p, p))
    s4 = sigma2**2
    for k in range(p):
        for l in range(p):
            C[k, l] = 2.0 * s4 * (
                float(first_theta[l] @ solve_factored(sig_factor, first_theta[k]))
                + float((pinv_sig_inv.T @ theta0) @ (d.second[k, l] @ theta0))
                - float(np.sum(sig_inv * d.second[k, l].T))
            )
            D[k, l] = 4.0 * sigma2**5 * float(
                mixed_theta[k] @ solve_factored(sig_factor, mixed_theta[l])
            )
    C = symmetrize(C, rtol=np.inf)
    return _sandwich(C, D)


def _sandwich_inputs(family, theta0, Sigma, sigma2):
    theta0 = as_vector(theta0, "theta0")
    if isinstance(family, str):
        family = make_family(family, len(theta0))
    if len(theta0) != family.n:
        raise DimensionMismatch(
            f"theta0 has length {len(theta0)}, family order is {family.n}"
        )
    if sigma2 <= 0.0:
        raise InvalidConfig(f"sigma2 must be positive, got {sigma2}")
    sig_factor = chol_pd(Sigma)
    return family, theta0, sig_factor


def ridge_limit_optimizers(theta0, Sigma):
    """Closed-form limit minimizers for the isotropic (ridge) kernel."""
    theta0 = as_vector(theta0, "theta0")
    sig_factor = chol_pd(Sigma)
    n = len(theta0)
    eta_b = float(theta0 @ theta0) / n
    z = solve_factored(sig_factor, theta0)
    eta_y = float(theta0 @ z) / float(np.trace(solve_factored(sig_factor, np.eye(n))))
    return eta_b, eta_y


def ridge_asymptotic_variances(theta0, Sigma, sigma2):
    """Closed-form asymptotic variances of both tuned ridge parameters.

    eb:      4 sigma2 theta0^T Sigma^{-1} theta0 / n^2
    sure_y:  4 sigma2 theta0^T Sigma^{-3} theta0 / tr(Sigma^{-1})^2
    """
    theta0 = as_vector(theta0, "theta0")
    n = len(theta0)
    sig_factor = chol_pd(Sigma)
    z = solve_factored(sig_factor, theta0)
    q1 = float(theta0 @ z)
    # theta0^T Sigma^{-3} theta0 as a symmetric quadratic form in z
    q3 = float(z @ solve_factored(sig_factor, z))
    tr = float(np.trace(solve_factored(sig_factor, np.eye(n))))
    var_eb = 4.0 * sigma2 * q1 / n**2
    var_sy = 4.0 * sigma2 * q3 / tr**2
    return var_eb, var_sy


def variance_ratio(theta0, Sigma):
    """Ratio of the two closed-form ridge variances (eb over sure_y).

    Tends to 1/n^2 as the smallest eigenvalue of Sigma goes to zero with
    the others fixed; equals 1 for isotropic Sigma.
    """
    theta0 = as_vector(theta0, "theta0")
    n = len(theta0)
    sig_factor = chol_pd(Sigma)
    z = solve_factored(sig_factor, theta0)
    q1 = float(theta0 @ z)
    q3 = float(z @ solve_factored(sig_factor, z))
    tr = float(np.trace(solve_factored(sig_factor, np.eye(n))))
    return (q1 / n**2) / (q3 / tr**2)


# -- Gaussian quadratic forms -----------------------------------------------


def gaussian_quad_mean(A, mu, cov):
    """E[a^T A a] for a ~ N(mu, cov): tr(A cov) + mu^T A mu."""
    A, mu, cov = _quad_inputs(A, mu, cov)
    return float(np.sum(A * cov.T) + mu @ (A @ mu))


def gaussian_quartic_mean(A, B, mu, cov):
    """E[(a^T A a)(a^T B a)] for a ~ N(mu, cov)."""
    A, mu, cov = _quad_inputs(A, mu, cov)
    B = np.asarray(B, dtype=float)
    if B.shape != A.shape:
        raise DimensionMismatch(f"B has shape {B.shape}, expected {A.shape}")
    bsym = B + B.T
    cross = float(np.sum((A @ cov) * (bsym @ cov).T))
    mean_shift = float(mu @ ((A + A.T) @ cov @ bsym @ mu))
    ea = float(np.sum(A * cov.T) + mu @ (A @ mu))
    eb = float(np.sum(B * cov.T) + mu @ (B @ mu))
    return cross + mean_shift + ea * eb


def _quad_inputs(A, mu, cov):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    mu = as_vector(mu, "mu", length=A.shape[0])
    cov = symmetrize(cov)
    if cov.shape != A.shape:
        raise DimensionMismatch(f"cov has shape {cov.shape}, expected {A.shape}")
    return A, mu, cov


def _as_family(family, n):
    if isinstance(family, str):
        return make_family(family, n)
    return family
