"""Multi-start derivative-free minimization of the selection criteria.

The search runs in the family's unconstrained coordinates (Nelder-Mead from
a fixed Sobol start grid), so box constraints never bind and every restart
is deterministic.  Candidate points where the kernel matrix is not positive
definite get an infinite cost.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .costs import COST_KINDS, LIMIT_COSTS, CostContext, limit_eb, limit_sure_y
from .exceptions import InvalidConfig, NoFiniteCost, NotPositiveDefinite
from .kernels import make_family

# restarts: 8 for one or two hyper-parameters, 16 for three
_N_STARTS = {1: 8, 2: 8, 3: 16}

# local minima within this cost gap of the best are reported as ties
_TIE_TOL = 1e-8


@dataclass(frozen=True)
class TuneResult:
    eta: np.ndarray
    cost: float
    n_evals: int
    converged: bool
    restarts: int
    near_ties: tuple = field(default=())


def _start_points(family, n_starts):
    lo, hi = family.start_box()
    sob = qmc.Sobol(d=family.p, scramble=False)
    unit = sob.random(n_starts)
    return lo + unit * (hi - lo)


def minimize_cost(objective, family, *, n_starts=None, xatol=1e-9, maxiter=None):
    """Minimize ``objective(eta)`` over the family's feasible set.

    Returns the best local minimum over all restarts, ties broken first by
    cost and then lexicographically by the hyper-parameter vector.  A run
    counts as converged when the simplex diameter in the unconstrained
    coordinates fell below ``xatol``.
    """
    p = family.p
    if n_starts is None:
        n_starts = _N_STARTS.get(p, 16)
    if maxiter is None:
        maxiter = 500 * p

    evals = 0

    def wrapped(x):
        nonlocal evals
        evals += 1
        try:
            value = objective(family.from_internal(x))
        except NotPositiveDefinite:
            return np.inf
        if not np.isfinite(value):
            return np.inf
        return float(value)

    starts = _start_points(family, n_starts)
    start_values = np.array([wrapped(x) for x in starts])
    finite = np.isfinite(start_values)
    if not finite.any():
        raise NoFiniteCost(
            f"all {n_starts} start points yield an infinite cost for family {family.name!r}"
        )

    runs = []
    for x0 in starts[finite]:
        res = minimize(
            wrapped,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": xatol,
                # xatol alone is the convergence criterion; disable the
                # function-value test (both must hold in scipy)
                "fatol": np.inf,
                "maxiter": maxiter,
                "maxfev": 2 * maxiter,
            },
        )
        if np.isfinite(res.fun):
            eta = family.from_internal(res.x)
            runs.append((float(res.fun), tuple(eta), bool(res.success)))

    if not runs:
        raise NoFiniteCost("no restart produced a finite cost")

    runs.sort(key=lambda r: (r[0], r[1]))
    best_cost, best_eta, best_ok = runs[0]
    ties = []
    for cost, eta, _ in runs[1:]:
        if cost > best_cost + _TIE_TOL:
            break
        if not np.allclose(eta, best_eta, rtol=1e-7, atol=1e-9) and not any(
            np.allclose(eta, t, rtol=1e-7, atol=1e-9) for t in ties
        ):
            ties.append(np.array(eta))
    return TuneResult(
        eta=np.array(best_eta),
        cost=best_cost,
        n_evals=evals,
        converged=best_ok,
        restarts=int(finite.sum()),
        near_ties=tuple(ties),
    )


def tune(kind, family, *, problem=None, theta0=None, Sigma=None, sigma2=None, **options):
    """Tune one criterion by id; see :data:`ebsure.costs.COST_KINDS`.

    Data criteria need ``problem``; the limit criteria need ``theta0`` (and
    ``Sigma`` plus ``sigma2`` for ``limit_sure_y``).  ``sigma2`` defaults to 1
    there because it scales the limit criterion without moving its minimizer.
    """
    if kind not in COST_KINDS:
        raise InvalidConfig(f"unknown cost kind {kind!r}; choose from {COST_KINDS}")
    if isinstance(family, str):
        order = problem.n if problem is not None else len(np.atleast_1d(theta0))
        family = make_family(family, order)

    if kind in LIMIT_COSTS:
        if theta0 is None and problem is not None:
            theta0 = problem.theta0
        if theta0 is None:
            raise InvalidConfig(f"{kind} requires theta0")
        if kind == "limit_eb":
            objective = lambda eta: limit_eb(family, eta, theta0)
        else:
            if Sigma is None and problem is not None:
                Sigma = problem.Sigma
            if Sigma is None:
                raise InvalidConfig("limit_sure_y requires Sigma")
            s2 = 1.0 if sigma2 is None else float(sigma2)
            objective = lambda eta: limit_sure_y(family, eta, theta0, Sigma, s2)
    else:
        if problem is None:
            raise InvalidConfig(f"{kind} requires a problem")
        ctx = CostContext.from_problem(problem, family)
        objective = ctx.cost(kind)
    return minimize_cost(objective, family, **options)
