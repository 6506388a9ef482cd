"""Scikit-learn style estimator wrapping tuning plus regularized least squares."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .costs import CostContext
from .exceptions import InvalidConfig
from .kernels import FAMILY_IDS, make_family
from .linalg import chol_pd, solve_factored, symmetrize
from .tuning import minimize_cost
from .validation import as_matrix, check_regression_pair


class KernelRegularizedRegression(BaseEstimator, RegressorMixin):
    """Linear regression with a structured prior covariance tuned from data.

    Fitting selects the kernel hyper-parameters by the chosen criterion
    ("eb" for the marginal-likelihood criterion, "sure_y" for the unbiased
    prediction-risk estimate) and then solves the regularized normal
    equations at the selected point.  The noise variance is treated as
    known and must be supplied.

    Parameters
    ----------
    family : str
        Kernel family id, one of "ridge", "tc", "dc", "ss".
    criterion : str
        "eb" or "sure_y".
    sigma2 : float
        Known noise variance; required at fit time.
    n_starts : int or None
        Optimizer restarts (None picks the family default).
    xatol : float
        Simplex-diameter convergence tolerance in unconstrained coordinates.

    Attributes
    ----------
    eta_ : ndarray of the selected hyper-parameters
    theta_ : ndarray of fitted regression coefficients
    criterion_value_ : float, criterion at ``eta_``
    tune_result_ : :class:`ebsure.tuning.TuneResult`
    """

    def __init__(self, family="tc", criterion="eb", sigma2=None, n_starts=None, xatol=1e-9):
        self.family = family
        self.criterion = criterion
        self.sigma2 = sigma2
        self.n_starts = n_starts
        self.xatol = xatol

    def fit(self, X, y):
        X, y = check_regression_pair(X, y)
        if self.family not in FAMILY_IDS:
            raise InvalidConfig(f"family must be one of {FAMILY_IDS}, got {self.family!r}")
        if self.criterion not in ("eb", "sure_y"):
            raise InvalidConfig(f"criterion must be 'eb' or 'sure_y', got {self.criterion!r}")
        if self.sigma2 is None or self.sigma2 <= 0.0:
            raise InvalidConfig("sigma2 (known noise variance) must be a positive float")
        if X.shape[0] <= X.shape[1]:
            raise InvalidConfig(
                f"need more rows than columns, got shape {X.shape}"
            )
        family = make_family(self.family, X.shape[1])
        ctx = CostContext(X, y, self.sigma2, family)
        result = minimize_cost(
            ctx.cost(self.criterion), family, n_starts=self.n_starts, xatol=self.xatol
        )
        P = family.matrix(result.eta)
        pinv = symmetrize(
            solve_factored(chol_pd(P), np.eye(family.n)), rtol=np.inf
        )
        R = ctx.gram + self.sigma2 * pinv
        self.theta_ = solve_factored(chol_pd(R), ctx.phi_t_y)
        self.eta_ = result.eta
        self.criterion_value_ = result.cost
        self.tune_result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "theta_"):
            raise NotFittedError("call fit before predict")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidConfig(
                f"X has {X.shape[1]} columns, fitted with {self.n_features_in_}"
            )
        return X @ self.theta_
