"""Input validation helpers used at public API boundaries."""

import numpy as np

from .exceptions import DimensionMismatch, InvalidConfig


def as_matrix(X, name="X"):
    """Coerce to a 2-d float array with at least one row and column."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidConfig(f"{name} contains non-finite entries")
    return X


def as_vector(v, name="y", length=None):
    """Coerce to a 1-d float array, optionally checking its length."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(
            f"{name} has length {v.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(v)):
        raise InvalidConfig(f"{name} contains non-finite entries")
    return v


def check_regression_pair(X, y):
    """Validate a (regressors, outputs) pair and return float arrays."""
    X = as_matrix(X)
    y = as_vector(y, length=X.shape[0])
    return X, y
