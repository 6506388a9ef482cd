"""Prior covariance (kernel) families for impulse-response style parameters.

Each family defines an n-by-n symmetric positive semidefinite matrix
``P(eta)`` on a box-shaped feasible set, together with exact analytic
first and second derivatives in the hyper-parameters.  Families also carry
a smooth bijection between the interior of the feasible set and an
unconstrained coordinate system, which is what the optimizer works in.

Supported ids: ``ridge`` (P = eta * I), ``tc`` (tuned-correlated,
P_ij = c * alpha^max(i,j)), ``dc`` (diagonal-correlated,
P_ij = c * alpha^((i+j)/2) * rho^|i-j|) and ``ss`` (stable spline,
P_ij = c * (alpha^(i+j+max(i,j))/2 - alpha^(3 max(i,j))/6)).
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainViolation, IndexOutOfRange
from .linalg import cholesky_inverse, symmetrize

# Margin keeping reparameterized coordinates away from the boundary of the
# feasible set, so line searches stay well-posed.
BOUNDARY_MARGIN = 1e-8

# Optimizer start boxes in unconstrained coordinates, per coordinate kind.
_START_BOX = {"log": (-10.0, 10.0), "logit": (-4.0, 4.0), "atanh": (-3.0, 3.0)}


def _logit(u):
    return np.log(u) - np.log1p(-u)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class KernelFamily:
    """Base class; concrete families fill in the matrix and its derivatives."""

    n: int
    name: str = field(init=False, default="")
    p: int = field(init=False, default=0)
    # per-coordinate transform kinds, e.g. ("log", "logit")
    _coords: tuple = field(init=False, default=())

    def __post_init__(self):
        if self.n < 1:
            raise DomainViolation(f"matrix order must be >= 1, got {self.n}")

    # -- feasible set ---------------------------------------------------

    def contains(self, eta):
        eta = self._check_len(eta)
        lo, hi = self._bounds
        return bool(np.all(lo <= eta) and np.all(eta <= hi))

    def in_interior(self, eta):
        eta = self._check_len(eta)
        lo, hi = self._bounds
        return bool(np.all(lo < eta) and np.all(eta < hi))

    @property
    def _bounds(self):
        try:
            return self.__dict__["_bounds_cache"]
        except KeyError:
            lo = np.array([{"log": 0.0, "logit": 0.0, "atanh": -1.0}[c] for c in self._coords])
            hi = np.array([{"log": np.inf, "logit": 1.0, "atanh": 1.0}[c] for c in self._coords])
            self.__dict__["_bounds_cache"] = (lo, hi)
            return lo, hi

    def _check_len(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if eta.shape != (self.p,):
            raise DomainViolation(
                f"{self.name} expects {self.p} hyper-parameters, got shape {eta.shape}"
            )
        return eta

    def _require_member(self, eta):
        eta = self._check_len(eta)
        if not self.contains(eta):
            raise DomainViolation(f"{self.name} hyper-parameters {eta} outside the feasible set")
        return eta

    def _require_interior(self, eta):
        eta = self._check_len(eta)
        if not self.in_interior(eta):
            raise DomainViolation(
                f"{self.name} hyper-parameters {eta} not in the interior of the feasible set"
            )
        return eta

    def _check_index(self, k):
        if not 0 <= k < self.p:
            raise IndexOutOfRange(f"hyper-parameter index {k} out of range for p={self.p}")
        return int(k)

    # -- unconstrained reparameterization -------------------------------

    def to_internal(self, eta):
        """Map interior hyper-parameters to unconstrained coordinates."""
        eta = self._require_interior(eta)
        eps = BOUNDARY_MARGIN
        out = np.empty(self.p)
        for i, kind in enumerate(self._coords):
            v = eta[i]
            if kind == "log":
                out[i] = np.log(v)
            elif kind == "logit":
                u = (v - eps) / (1.0 - 2.0 * eps)
                if not 0.0 < u < 1.0:
                    raise DomainViolation(
                        f"{self.name} coordinate {i}={v} too close to the boundary"
                    )
                out[i] = _logit(u)
            else:  # atanh
                u = v / (1.0 - eps)
                if not -1.0 < u < 1.0:
                    raise DomainViolation(
                        f"{self.name} coordinate {i}={v} too close to the boundary"
                    )
                out[i] = np.arctanh(u)
        return out

    def from_internal(self, x):
        """Inverse of ``to_internal``; always lands strictly inside the set."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.p,):
            raise DomainViolation(f"expected {self.p} coordinates, got shape {x.shape}")
        eps = BOUNDARY_MARGIN
        out = np.empty(self.p)
        for i, kind in enumerate(self._coords):
            if kind == "log":
                out[i] = np.exp(x[i])
            elif kind == "logit":
                out[i] = eps + (1.0 - 2.0 * eps) * _sigmoid(x[i])
            else:
                out[i] = (1.0 - eps) * np.tanh(x[i])
        return out

    def start_box(self):
        """(lower, upper) corner arrays of the optimizer start box."""
        lo = np.array([_START_BOX[c][0] for c in self._coords])
        hi = np.array([_START_BOX[c][1] for c in self._coords])
        return lo, hi

    # -- matrix and derivatives -----------------------------------------

    def matrix(self, eta):
        eta = self._require_member(eta)
        return symmetrize(self._matrix(eta), rtol=np.inf)

    def grad(self, eta, k):
        eta = self._require_interior(eta)
        k = self._check_index(k)
        return symmetrize(self._grad(eta, k), rtol=np.inf)

    def hess(self, eta, k, l):
        eta = self._require_interior(eta)
        k = self._check_index(k)
        l = self._check_index(l)
        # mixed partials commute; compute in canonical order
        a, b = min(k, l), max(k, l)
        return symmetrize(self._hess(eta, a, b), rtol=np.inf)

    def inv_derivatives(self, eta):
        """P^{-1} and its first and second hyper-parameter derivatives.

        Uses d(P^{-1})/dk = -P^{-1} dP/dk P^{-1} and the chain rule for the
        second derivatives; everything comes back exactly symmetric.
        """
        eta = self._require_interior(eta)
        pinv = cholesky_inverse(self.matrix(eta))
        grads = [self.grad(eta, k) for k in range(self.p)]
        first = [-pinv @ g @ pinv for g in grads]
        first = [symmetrize(m, rtol=np.inf) for m in first]
        second = np.empty((self.p, self.p), dtype=object)
        for k in range(self.p):
            for l in range(k, self.p):
                cross = pinv @ grads[l] @ pinv @ grads[k] @ pinv
                curv = pinv @ self.hess(eta, k, l) @ pinv
                m = symmetrize(cross + cross.T - curv, rtol=np.inf)
                second[k, l] = m
                second[l, k] = m
        return InverseDerivatives(pinv=pinv, first=first, second=second)

    def _matrix(self, eta):
        raise NotImplementedError

    def _grad(self, eta, k):
        raise NotImplementedError

    def _hess(self, eta, k, l):
        raise NotImplementedError


@dataclass(frozen=True)
class InverseDerivatives:
    pinv: np.ndarray
    first: list
    second: np.ndarray  # (p, p) object array of n-by-n matrices


@dataclass(frozen=True)
class RidgeKernel(KernelFamily):
    """Isotropic prior P = eta * I."""

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "name", "ridge")
        object.__setattr__(self, "p", 1)
        object.__setattr__(self, "_coords", ("log",))

    def _matrix(self, eta):
        return eta[0] * np.eye(self.n)

    def _grad(self, eta, k):
        return np.eye(self.n)

    def _hess(self, eta, k, l):
        return np.zeros((self.n, self.n))


class _GriddedKernel(KernelFamily):
    """Shared index grids for families defined entrywise on (i, j)."""

    @property
    def _grids(self):
        try:
            return self.__dict__["_grid_cache"]
        except KeyError:
            idx = np.arange(1, self.n + 1, dtype=float)
            grids = {
                "max": np.maximum.outer(idx, idx),
                "sum": np.add.outer(idx, idx),
                "absdiff": np.abs(np.subtract.outer(idx, idx)),
            }
            self.__dict__["_grid_cache"] = grids
            return grids


@dataclass(frozen=True)
class TCKernel(_GriddedKernel):
    """Tuned-correlated kernel, P_ij = c * alpha^max(i,j)."""

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "name", "tc")
        object.__setattr__(self, "p", 2)
        object.__setattr__(self, "_coords", ("log", "logit"))

    def _matrix(self, eta):
        c, a = eta
        return c * a ** self._grids["max"]

    def _grad(self, eta, k):
        c, a = eta
        m = self._grids["max"]
        if k == 0:
            return a**m
        return c * m * a ** (m - 1)

    def _hess(self, eta, k, l):
        c, a = eta
        m = self._grids["max"]
        if (k, l) == (0, 0):
            return np.zeros((self.n, self.n))
        if (k, l) == (0, 1):
            return m * a ** (m - 1)
        return c * m * (m - 1) * a ** (m - 2)


@dataclass(frozen=True)
class DCKernel(_GriddedKernel):
    """Diagonal-correlated kernel, P_ij = c * alpha^((i+j)/2) * rho^|i-j|."""

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "name", "dc")
        object.__setattr__(self, "p", 3)
        object.__setattr__(self, "_coords", ("log", "logit", "atanh"))

    def _pieces(self, eta):
        c, a, r = eta
        e = self._grids["sum"] / 2.0
        d = self._grids["absdiff"]
        return c, a, r, e, d

    @staticmethod
    def _dpow(base, expo):
        # d/dr r^d = d * r^(d-1), with the d = 0 entries exactly zero and
        # no 0**-1 evaluated along the way
        shifted = np.where(expo > 0, expo - 1, 0.0)
        return expo * base**shifted

    def _matrix(self, eta):
        c, a, r, e, d = self._pieces(eta)
        return c * a**e * r**d

    def _grad(self, eta, k):
        c, a, r, e, d = self._pieces(eta)
        if k == 0:
            return a**e * r**d
        if k == 1:
            return c * e * a ** (e - 1) * r**d
        return c * a**e * self._dpow(r, d)

    def _hess(self, eta, k, l):
        c, a, r, e, d = self._pieces(eta)
        if (k, l) == (0, 0):
            return np.zeros((self.n, self.n))
        if (k, l) == (0, 1):
            return e * a ** (e - 1) * r**d
        if (k, l) == (0, 2):
            return a**e * self._dpow(r, d)
        if (k, l) == (1, 1):
            return c * e * (e - 1) * a ** (e - 2) * r**d
        if (k, l) == (1, 2):
            return c * e * a ** (e - 1) * self._dpow(r, d)
        # d^2/dr^2 r^d = d(d-1) r^(d-2); zero for d in {0, 1}
        shifted = np.where(d > 1, d - 2, 0.0)
        return c * a**e * d * (d - 1) * r**shifted


@dataclass(frozen=True)
class SSKernel(_GriddedKernel):
    """Stable spline kernel, P_ij = c*(alpha^(i+j+max)/2 - alpha^(3 max)/6)."""

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "name", "ss")
        object.__setattr__(self, "p", 2)
        object.__setattr__(self, "_coords", ("log", "logit"))

    def _expos(self):
        m = self._grids["max"]
        return self._grids["sum"] + m, 3.0 * m

    def _matrix(self, eta):
        c, a = eta
        e1, e2 = self._expos()
        return c * (a**e1 / 2.0 - a**e2 / 6.0)

    def _grad(self, eta, k):
        c, a = eta
        e1, e2 = self._expos()
        if k == 0:
            return a**e1 / 2.0 - a**e2 / 6.0
        return c * (e1 * a ** (e1 - 1) / 2.0 - e2 * a ** (e2 - 1) / 6.0)

    def _hess(self, eta, k, l):
        c, a = eta
        e1, e2 = self._expos()
        if (k, l) == (0, 0):
            return np.zeros((self.n, self.n))
        if (k, l) == (0, 1):
            return e1 * a ** (e1 - 1) / 2.0 - e2 * a ** (e2 - 1) / 6.0
        return c * (
            e1 * (e1 - 1) * a ** (e1 - 2) / 2.0 - e2 * (e2 - 1) * a ** (e2 - 2) / 6.0
        )


FAMILY_IDS = ("ridge", "tc", "dc", "ss")

_FAMILIES = {"ridge": RidgeKernel, "tc": TCKernel, "dc": DCKernel, "ss": SSKernel}


def make_family(family_id, n):
    """Instantiate a kernel family by string id for matrices of order n."""
    try:
        cls = _FAMILIES[family_id]
    except KeyError:
        raise DomainViolation(
            f"unknown kernel family {family_id!r}; choose from {FAMILY_IDS}"
        ) from None
    return cls(n=n)
