"""Synthetic linear-regression problems with controlled conditioning.

Regressor rows are i.i.d. zero-mean Gaussian with a covariance built to a
prescribed condition number; the noise variance is solved from the realized
sample so that the signal-to-noise ratio is hit exactly, not just in
expectation.
"""

import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import InsufficientSamples, InvalidConfig, NotPositiveDefinite, RankDeficient
from .linalg import chol_pd, eigen_sym, symmetrize
from .validation import as_matrix, as_vector

_GENERATION_ATTEMPTS = 3


@dataclass(frozen=True)
class GenConfig:
    """Recipe for one synthetic problem.

    ``theta0 = None`` draws the true parameter as i.i.d. standard Gaussian
    entries; otherwise the supplied vector is used as-is.
    """

    n: int
    N: int
    cond_target: float = 1.0
    lambda1: float = 1.0
    snr_target: float = 1.0
    seed: int = 0
    theta0: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig(f"n must be >= 1, got {self.n}")
        if self.N <= self.n:
            raise InvalidConfig(f"N must exceed n, got N={self.N}, n={self.n}")
        if self.cond_target < 1.0:
            raise InvalidConfig(f"cond_target must be >= 1, got {self.cond_target}")
        if self.lambda1 <= 0.0:
            raise InvalidConfig(f"lambda1 must be positive, got {self.lambda1}")
        if self.snr_target <= 0.0:
            raise InvalidConfig(f"snr_target must be positive, got {self.snr_target}")
        if self.theta0 is not None:
            theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
            if theta0.shape != (self.n,):
                raise InvalidConfig(
                    f"theta0 has shape {theta0.shape}, expected ({self.n},)"
                )
            object.__setattr__(self, "theta0", theta0)


@dataclass(frozen=True)
class RegressionProblem:
    """One realized problem Y = Phi theta0 + V.

    ``Sigma`` is the covariance the regressor rows were drawn from and
    ``sigma2`` the variance the noise was drawn with; both are carried
    around because the oracle criteria and the limit analysis need them.
    """

    Phi: np.ndarray
    Y: np.ndarray
    theta0: np.ndarray
    sigma2: float
    Sigma: np.ndarray

    def __post_init__(self):
        Phi = as_matrix(self.Phi, name="Phi")
        N, n = Phi.shape
        if N <= n:
            raise InvalidConfig(f"need more rows than columns, got shape {Phi.shape}")
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "Y", as_vector(self.Y, name="Y", length=N))
        object.__setattr__(self, "theta0", as_vector(self.theta0, name="theta0", length=n))
        if self.sigma2 <= 0.0:
            raise InvalidConfig(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "Sigma", symmetrize(self.Sigma))
        if self.Sigma.shape != (n, n):
            raise InvalidConfig(
                f"Sigma has shape {self.Sigma.shape}, expected {(n, n)}"
            )

    @property
    def N(self):
        return self.Phi.shape[0]

    @property
    def n(self):
        return self.Phi.shape[1]

    @cached_property
    def gram(self):
        """Phi.T @ Phi, stored exactly symmetric; raises if rank deficient."""
        G = symmetrize(self.Phi.T @ self.Phi, rtol=np.inf)
        try:
            chol_pd(G)
        except NotPositiveDefinite as exc:
            raise RankDeficient(f"Phi.T Phi is numerically singular: {exc}") from None
        return G

    @property
    def noise(self):
        """The realized disturbance vector V = Y - Phi theta0."""
        return self.Y - self.Phi @ self.theta0

    def with_noise(self, v):
        """Same regressors and truth, different noise realization."""
        v = as_vector(v, name="v", length=self.N)
        return replace(self, Y=self.Phi @ self.theta0 + v)


def make_covariance(n, cond_target, lambda1, seed):
    """Random SPD covariance with an exact geometric spectrum.

    Eigenvalues run geometrically from ``lambda1`` down to
    ``lambda1 / cond_target``; the eigenbasis is Haar-distributed (QR of a
    Gaussian matrix with the R diagonal sign-normalized) and fully
    determined by ``seed``.
    """
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    if cond_target < 1.0:
        raise InvalidConfig(f"cond_target must be >= 1, got {cond_target}")
    if lambda1 <= 0.0:
        raise InvalidConfig(f"lambda1 must be positive, got {lambda1}")
    if n == 1:
        if cond_target != 1.0:
            raise InvalidConfig("a 1x1 covariance cannot have cond_target > 1")
        return np.array([[float(lambda1)]])
    spectrum = np.geomspace(lambda1, lambda1 / cond_target, n)
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diagonal(R))
    signs[signs == 0] = 1.0
    U = Q * signs
    return symmetrize(U @ (spectrum[:, None] * U.T), rtol=np.inf)


def compute_snr(problem):
    """Sample variance of the noise-free output over the noise variance."""
    f = problem.Phi @ problem.theta0
    return float(np.mean((f - f.mean()) ** 2) / problem.sigma2)


def sample_problem(cfg, *, Sigma=None, theta0=None):
    """Draw one problem per the config; deterministic given ``cfg.seed``.

    ``Sigma`` / ``theta0`` override the seeded construction, which is how a
    sweep holds them fixed while regressors and noise are redrawn.  The
    noise variance is solved from the realized noise-free output so the
    sample snr equals ``snr_target`` exactly.
    """
    root = np.random.SeedSequence(cfg.seed)
    ss_sigma, ss_theta, ss_data = root.spawn(3)
    if Sigma is None:
        Sigma = make_covariance(cfg.n, cfg.cond_target, cfg.lambda1, ss_sigma)
    else:
        Sigma = symmetrize(Sigma)
    if theta0 is None:
        theta0 = cfg.theta0
    if theta0 is None:
        theta0 = np.random.default_rng(ss_theta).standard_normal(cfg.n)
    theta0 = as_vector(theta0, name="theta0", length=cfg.n)

    w, U = eigen_sym(Sigma)
    if w[-1] <= 0.0:
        raise InvalidConfig("Sigma must be positive definite")
    sqrt_sigma = U @ (np.sqrt(w)[:, None] * U.T)

    last_error = None
    for attempt_ss in ss_data.spawn(_GENERATION_ATTEMPTS):
        rng = np.random.default_rng(attempt_ss)
        Phi = rng.standard_normal((cfg.N, cfg.n)) @ sqrt_sigma
        f = Phi @ theta0
        signal_var = float(np.mean((f - f.mean()) ** 2))
        if signal_var <= 0.0:
            raise InvalidConfig(
                "theta0 yields zero noise-free output variance; snr cannot be enforced"
            )
        sigma2 = signal_var / cfg.snr_target
        V = np.sqrt(sigma2) * rng.standard_normal(cfg.N)
        problem = RegressionProblem(
            Phi=Phi, Y=f + V, theta0=theta0, sigma2=sigma2, Sigma=Sigma
        )
        try:
            problem.gram
        except RankDeficient as exc:
            last_error = exc
            continue
        return problem
    raise RankDeficient(
        f"regressors rank deficient after {_GENERATION_ATTEMPTS} attempts: {last_error}"
    )


def empirical_covariance(samples):
    """(1/N) sum (x_i - mean)(x_i - mean)^T over the rows of ``samples``."""
    X = as_matrix(samples, name="samples")
    if X.shape[0] < 2:
        raise InsufficientSamples(
            f"need at least 2 samples, got {X.shape[0]}"
        )
    centered = X - X.mean(axis=0)
    return symmetrize(centered.T @ centered / X.shape[0], rtol=np.inf)


# -- problem bundle serialization ---------------------------------------

_PHI_HEADER = "regressor matrix; rows are observations t=1..N, columns are components j=1..n"
_Y_HEADER = "output vector; one value per observation t=1..N"
_THETA_HEADER = "true parameter vector; one value per component j=1..n"
_SIGMA_HEADER = "regressor covariance; row i column j in plain row-major CSV order"


def save_problem(problem, directory):
    """Write a problem as a CSV bundle (Phi, Y, theta0, Sigma, meta)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savetxt(directory / "Phi.csv", problem.Phi, fmt="%.17g", delimiter=",",
               header=_PHI_HEADER)
    np.savetxt(directory / "Y.csv", problem.Y, fmt="%.17g", delimiter=",",
               header=_Y_HEADER)
    np.savetxt(directory / "theta0.csv", problem.theta0, fmt="%.17g", delimiter=",",
               header=_THETA_HEADER)
    np.savetxt(directory / "Sigma.csv", problem.Sigma, fmt="%.17g", delimiter=",",
               header=_SIGMA_HEADER)
    meta = {
        "N": problem.N,
        "n": problem.n,
        "sigma2": problem.sigma2,
        "snr": compute_snr(problem),
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(directory):
    """Read back a bundle written by :func:`save_problem`."""
    directory = Path(directory)
    Phi = np.loadtxt(directory / "Phi.csv", delimiter=",", ndmin=2)
    Y = np.loadtxt(directory / "Y.csv", delimiter=",")
    theta0 = np.loadtxt(directory / "theta0.csv", delimiter=",")
    Sigma = np.loadtxt(directory / "Sigma.csv", delimiter=",", ndmin=2)
    with open(directory / "meta.json") as fh:
        meta = json.load(fh)
    return RegressionProblem(
        Phi=Phi, Y=Y, theta0=np.atleast_1d(theta0), sigma2=float(meta["sigma2"]),
        Sigma=Sigma,
    )
