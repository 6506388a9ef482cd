"""Kernel-regularized least squares with tuned hyper-parameters.

The package covers the full loop: synthetic ill-conditioned regression
problems, kernel families with analytic derivatives, empirical-Bayes and
SURE selection criteria with their oracle and large-sample counterparts,
finite-sample bound terms, sandwich covariances for the tuned
hyper-parameters, and a reproducible Monte Carlo harness.
"""

__version__ = "0.1.0"

from .costs import COST_KINDS, CostContext, limit_eb, limit_sure_y
from .estimators import (
    Estimate,
    fit_g,
    fit_matrix,
    fit_y,
    ls_estimate,
    mse_g_mc,
    mse_y_mc,
    rls_estimate,
)
from .kernels import FAMILY_IDS, make_family
from .mc import (
    ExperimentConfig,
    McRecord,
    McReport,
    convergence_slopes,
    normality_diagnostics,
    run_experiment,
)
from .model import KernelRegularizedRegression
from .problems import (
    GenConfig,
    RegressionProblem,
    compute_snr,
    empirical_covariance,
    load_problem,
    make_covariance,
    sample_problem,
    save_problem,
)
from .asymptotics import (
    CondPowerRow,
    EbBoundTerms,
    SandwichCov,
    SyBoundTerms,
    check_eb_bound,
    check_sy_bound,
    cond_power_table,
    cond_sweep_problems,
    eb_bound_terms,
    gaussian_quad_mean,
    gaussian_quartic_mean,
    ridge_asymptotic_variances,
    ridge_limit_optimizers,
    sandwich_eb,
    sandwich_sure_y,
    sy_bound_terms,
    variance_ratio,
)
from .tuning import TuneResult, minimize_cost, tune

__all__ = [
    "COST_KINDS",
    "CondPowerRow",
    "CostContext",
    "EbBoundTerms",
    "Estimate",
    "ExperimentConfig",
    "FAMILY_IDS",
    "GenConfig",
    "KernelRegularizedRegression",
    "McRecord",
    "McReport",
    "RegressionProblem",
    "SandwichCov",
    "SyBoundTerms",
    "TuneResult",
    "check_eb_bound",
    "check_sy_bound",
    "compute_snr",
    "cond_power_table",
    "cond_sweep_problems",
    "convergence_slopes",
    "eb_bound_terms",
    "empirical_covariance",
    "fit_g",
    "fit_matrix",
    "fit_y",
    "gaussian_quad_mean",
    "gaussian_quartic_mean",
    "limit_eb",
    "limit_sure_y",
    "load_problem",
    "ls_estimate",
    "make_covariance",
    "make_family",
    "minimize_cost",
    "mse_g_mc",
    "mse_y_mc",
    "normality_diagnostics",
    "ridge_asymptotic_variances",
    "ridge_limit_optimizers",
    "rls_estimate",
    "run_experiment",
    "sample_problem",
    "sandwich_eb",
    "sandwich_sure_y",
    "save_problem",
    "sy_bound_terms",
    "tune",
    "variance_ratio",
]
