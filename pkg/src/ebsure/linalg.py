"""Dense symmetric linear algebra with explicit stability contracts.

Everything that touches an inverse goes through a Cholesky factorization;
explicit matrix inverses are only ever formed by triangular solves against
the identity, and only where the inverse itself is the quantity of interest.
"""

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import NotPositiveDefinite

# Relative pivot cutoff: a Cholesky pivot below PIVOT_RTOL * (trace/dim)
# is treated as a failed factorization.
PIVOT_RTOL = 1e-12

# Largest accepted relative asymmetry before a matrix is rejected outright.
SYMMETRY_RTOL = 1e-12


def symmetrize(A, rtol=SYMMETRY_RTOL):
    """Return the exactly symmetric part of ``A``; reject real asymmetry.

    Drift of relative size up to ``rtol`` (as accumulates in chained matrix
    products) is silently repaired; anything larger raises ``ValueError``.
    ``rtol=np.inf`` skips the check for matrices symmetric by construction.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.isfinite(rtol):
        scale = np.abs(A).max()
        gap = np.abs(A - A.T).max()
        if scale > 0 and gap > rtol * scale:
            raise ValueError(
                f"matrix is not symmetric: max |A - A.T| = {gap:.3e} "
                f"exceeds {rtol:.1e} * max|A|"
            )
    # (a_ij + a_ji)/2 is computed from the same operands on both sides of
    # the diagonal, so the result is exactly symmetric in floating point.
    return (A + A.T) / 2.0


def chol_pd(A):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Only the lower triangle is read; callers pass matrices whose symmetry
    has been enforced at construction.  Raises ``NotPositiveDefinite`` when
    the factorization fails or any pivot falls below the scale-aware cutoff
    ``PIVOT_RTOL * trace/dim``.
    """
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    cutoff = PIVOT_RTOL * (np.trace(A) / A.shape[0])
    if np.min(np.diagonal(L)) ** 2 <= cutoff:
        raise NotPositiveDefinite(
            f"smallest Cholesky pivot below {cutoff:.3e} (scale-aware cutoff)"
        )
    return L


def cholesky_solve(A, B):
    """Solve A X = B for symmetric positive definite ``A``."""
    L = chol_pd(symmetrize(A))
    return cho_solve((L, True), np.asarray(B, dtype=float), check_finite=False)


def solve_factored(L, B):
    """Solve A X = B given the lower Cholesky factor ``L`` of A."""
    return cho_solve((L, True), B, check_finite=False)


def cholesky_inverse(A):
    """Explicit inverse of an SPD matrix via its Cholesky factor.

    Use only where the inverse matrix itself is needed (e.g. as a term of
    a new matrix); plain linear systems should go through cholesky_solve.
    """
    L = chol_pd(A)
    Linv = solve_triangular(L, np.eye(L.shape[0]), lower=True, check_finite=False)
    return symmetrize(Linv.T @ Linv, rtol=np.inf)


def logdet_pd(A):
    """log det A for SPD ``A``, via the Cholesky factor."""
    L = chol_pd(symmetrize(A))
    return 2.0 * float(np.sum(np.log(np.diagonal(L))))


def logdet_factored(L):
    """log det A given the lower Cholesky factor ``L`` of A."""
    return 2.0 * float(np.sum(np.log(np.diagonal(L))))


def eigen_sym(A):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, U)`` with eigenvalues ``w`` sorted descending and
    orthonormal eigenvectors in the columns of ``U`` so that
    ``A = U @ diag(w) @ U.T``.
    """
    A = symmetrize(A)
    w, U = np.linalg.eigh(A)
    return w[::-1].copy(), U[:, ::-1].copy()


def cond_number(A):
    """Ratio of the largest to the smallest eigenvalue of an SPD matrix."""
    w, _ = eigen_sym(A)
    if w[-1] <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3e} is not positive"
        )
    return float(w[0] / w[-1])


def frob_norm(A):
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(A, dtype=float), "fro"))


def fro_inverse_bound(A):
    """Upper bound sqrt(n) * cond(A) / lambda_1(A) on ||A^{-1}||_F."""
    A = symmetrize(A)
    w, _ = eigen_sym(A)
    if w[-1] <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3e} is not positive"
        )
    n = A.shape[0]
    return float(np.sqrt(n) * (w[0] / w[-1]) / w[0])


def inv_frob_norm_pd(A):
    """||A^{-1}||_F of an SPD matrix computed from its spectrum."""
    w, _ = eigen_sym(A)
    if w[-1] <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3e} is not positive"
        )
    return float(np.sqrt(np.sum(1.0 / w**2)))


def sqrt_pd(A):
    """Symmetric square root of an SPD matrix."""
    w, U = eigen_sym(A)
    if w[-1] <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3e} is not positive"
        )
    return symmetrize(U @ (np.sqrt(w)[:, None] * U.T), rtol=np.inf)


def rank_by_svd(M, rtol=1e-10):
    """Numerical rank: count singular values above ``rtol`` times the largest."""
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))
