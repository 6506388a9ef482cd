import numpy as np
import pytest
from sklearn.base import clone

from ebsure.costs import CostContext
from ebsure.exceptions import InvalidConfig
from ebsure.kernels import make_family
from ebsure.model import KernelRegularizedRegression
from ebsure.problems import GenConfig, sample_problem
from ebsure.tuning import minimize_cost


@pytest.fixture(scope="module")
def problem():
    return sample_problem(GenConfig(n=4, N=120, cond_target=100.0, snr_target=5.0, seed=31))


def test_get_params_roundtrip():
    model = KernelRegularizedRegression(family="tc", criterion="sure_y", sigma2=0.5)
    params = model.get_params()
    assert params["family"] == "tc"
    assert params["criterion"] == "sure_y"
    rebuilt = KernelRegularizedRegression(**params)
    assert rebuilt.get_params() == params
    cloned = clone(model)
    assert cloned.get_params() == params


def test_fit_predict_matches_direct_solution(problem):
    model = KernelRegularizedRegression(family="tc", criterion="eb", sigma2=problem.sigma2)
    model.fit(problem.Phi, problem.Y)
    fam = make_family("tc", problem.n)
    ctx = CostContext.from_problem(problem, fam)
    res = minimize_cost(ctx.eb, fam)
    assert np.allclose(model.eta_, res.eta)
    assert model.criterion_value_ == pytest.approx(res.cost)
    pred = model.predict(problem.Phi)
    assert pred.shape == (problem.N,)
    # score is the usual coefficient of determination
    assert 0.0 < model.score(problem.Phi, problem.Y) <= 1.0


def test_sure_y_criterion_fits(problem):
    model = KernelRegularizedRegression(family="ridge", criterion="sure_y",
                                        sigma2=problem.sigma2)
    model.fit(problem.Phi, problem.Y)
    assert model.eta_.shape == (1,)
    assert model.tune_result_.converged


def test_requires_sigma2(problem):
    model = KernelRegularizedRegression(family="tc", criterion="eb")
    with pytest.raises(InvalidConfig):
        model.fit(problem.Phi, problem.Y)


def test_rejects_bad_family_and_criterion(problem):
    with pytest.raises(InvalidConfig):
        KernelRegularizedRegression(family="poly", sigma2=1.0).fit(problem.Phi, problem.Y)
    with pytest.raises(InvalidConfig):
        KernelRegularizedRegression(criterion="cv", sigma2=1.0).fit(problem.Phi, problem.Y)


def test_predict_before_fit():
    from sklearn.exceptions import NotFittedError

    model = KernelRegularizedRegression(sigma2=1.0)
    with pytest.raises(NotFittedError):
        model.predict(np.ones((3, 2)))


def test_predict_validates_width(problem):
    model = KernelRegularizedRegression(family="ridge", sigma2=problem.sigma2)
    model.fit(problem.Phi, problem.Y)
    with pytest.raises(InvalidConfig):
        model.predict(np.ones((5, problem.n + 1)))
