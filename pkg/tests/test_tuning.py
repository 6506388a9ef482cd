import numpy as np
import pytest

from ebsure.costs import CostContext
from ebsure.exceptions import InvalidConfig, NoFiniteCost, NotPositiveDefinite
from ebsure.kernels import make_family
from ebsure.problems import GenConfig, make_covariance, sample_problem
from ebsure.tuning import minimize_cost, tune


def test_ridge_limit_eb_closed_form():
    # isotropic prior: the limit criterion is minimized at mean parameter power
    theta0 = np.array([1.0, 1.0])
    res = tune("limit_eb", "ridge", theta0=theta0)
    assert res.eta[0] == pytest.approx(1.0, abs=1e-6)
    assert res.converged
    theta0 = np.array([3.0, -1.0, 0.5])
    res = tune("limit_eb", "ridge", theta0=theta0)
    assert res.eta[0] == pytest.approx(float(theta0 @ theta0) / 3.0, abs=1e-6)


def test_ridge_limit_sure_y_closed_form():
    theta0 = np.array([1.0, 1.0])
    res = tune("limit_sure_y", "ridge", theta0=theta0, Sigma=np.eye(2))
    assert res.eta[0] == pytest.approx(1.0, abs=1e-6)
    Sigma = make_covariance(3, 30.0, 1.0, seed=1)
    theta0 = np.array([0.5, 1.5, -0.75])
    res = tune("limit_sure_y", "ridge", theta0=theta0, Sigma=Sigma)
    expected = float(theta0 @ np.linalg.solve(Sigma, theta0)) / float(
        np.trace(np.linalg.inv(Sigma))
    )
    assert res.eta[0] == pytest.approx(expected, rel=1e-6)


def test_tc_eb_beats_dense_grid():
    cfg = GenConfig(n=5, N=200, cond_target=100.0, snr_target=5.0, seed=3)
    problem = sample_problem(cfg)
    fam = make_family("tc", 5)
    ctx = CostContext.from_problem(problem, fam)
    res = minimize_cost(ctx.eb, fam)
    best = np.inf
    for c in np.geomspace(1e-3, 1e3, 60):
        for a in np.linspace(0.02, 0.98, 60):
            try:
                best = min(best, ctx.eb(np.array([c, a])))
            except NotPositiveDefinite:
                continue
    assert res.cost <= best + 1e-6


def test_tuning_deterministic():
    cfg = GenConfig(n=4, N=100, cond_target=50.0, snr_target=5.0, seed=4)
    problem = sample_problem(cfg)
    fam = make_family("tc", 4)
    r1 = tune("eb", fam, problem=problem)
    r2 = tune("eb", fam, problem=problem)
    assert np.array_equal(r1.eta, r2.eta)
    assert r1.cost == r2.cost
    assert r1.n_evals == r2.n_evals


def test_oracle_mse_y_dominance():
    # the oracle-risk minimizer is at least as good for its own criterion
    for seed in range(5):
        cfg = GenConfig(n=3, N=80, cond_target=100.0, snr_target=5.0, seed=seed)
        problem = sample_problem(cfg)
        fam = make_family("ridge", 3)
        ctx = CostContext.from_problem(problem, fam)
        res_oracle = minimize_cost(ctx.oracle_mse_y, fam)
        res_sy = minimize_cost(ctx.sure_y, fam)
        assert ctx.oracle_mse_y(res_oracle.eta) <= ctx.oracle_mse_y(res_sy.eta) + 1e-9


def test_no_finite_cost():
    fam = make_family("ridge", 2)
    with pytest.raises(NoFiniteCost):
        minimize_cost(lambda eta: np.inf, fam)


def test_ss_tuning_survives_non_pd_region():
    # small-alpha stable-spline matrices fail the positive-definite cutoff
    # and must be treated as infinitely bad rather than aborting the search
    cfg = GenConfig(n=5, N=150, cond_target=20.0, snr_target=5.0, seed=8)
    problem = sample_problem(cfg)
    res = tune("eb", "ss", problem=problem)
    assert np.isfinite(res.cost)
    assert make_family("ss", 5).in_interior(res.eta)


def test_near_ties_reported():
    # two exact global minima in internal coordinates at eta = e and 1/e
    fam = make_family("ridge", 2)
    res = minimize_cost(lambda eta: (np.log(eta[0]) ** 2 - 1.0) ** 2, fam)
    candidates = [res.eta[0]] + [t[0] for t in res.near_ties]
    assert any(abs(v - np.e) <= 1e-4 for v in candidates)
    assert any(abs(v - 1.0 / np.e) <= 1e-4 for v in candidates)


def test_result_reports_restarts_and_evals():
    theta0 = np.array([2.0, 0.5])
    res = tune("limit_eb", "ridge", theta0=theta0)
    assert res.restarts == 8
    assert res.n_evals > res.restarts


def test_tune_validates_inputs():
    with pytest.raises(InvalidConfig):
        tune("nonsense", "ridge", theta0=np.ones(2))
    with pytest.raises(InvalidConfig):
        tune("eb", make_family("ridge", 2))  # no problem given
    with pytest.raises(InvalidConfig):
        tune("limit_sure_y", "ridge", theta0=np.ones(2))  # no Sigma


def test_hyperparameter_gaps_shrink_with_sample_size():
    # median distance to the limit minimizers decreases along the N grid
    fam = make_family("ridge", 5)
    theta0 = np.random.default_rng(99).standard_normal(5)
    Sigma = make_covariance(5, 100.0, 1.0, seed=17)
    eta_b = tune("limit_eb", fam, theta0=theta0).eta
    eta_y = tune("limit_sure_y", fam, theta0=theta0, Sigma=Sigma).eta
    med_eb, med_sy = [], []
    for N in (200, 2000, 20000):
        gaps_eb, gaps_sy = [], []
        for seed in range(50):
            cfg = GenConfig(n=5, N=N, cond_target=100.0, snr_target=5.0, seed=seed)
            problem = sample_problem(cfg, Sigma=Sigma, theta0=theta0)
            ctx = CostContext.from_problem(problem, fam)
            gaps_eb.append(abs(minimize_cost(ctx.eb, fam).eta[0] - eta_b[0]))
            gaps_sy.append(abs(minimize_cost(ctx.sure_y, fam).eta[0] - eta_y[0]))
        med_eb.append(np.median(gaps_eb))
        med_sy.append(np.median(gaps_sy))
    assert med_eb[0] > med_eb[1] > med_eb[2]
    assert med_sy[0] > med_sy[1] > med_sy[2]
