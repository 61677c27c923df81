import json
import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ncphi4 import rg_flow
from ncphi4 import amplitudes as amp
from ncphi4.errors import DomainError, FitRejectedError
from ncphi4.model import ModelParams
from ncphi4.rg_flow import CutoffGrid, DivergenceRegressor, beta_report, fit_divergence

PI2 = math.pi**2
GRID = CutoffGrid.logspace(1e2, 1e4, 9)


@pytest.fixture(scope="module")
def report():
    return beta_report(ModelParams(), GRID)


def test_fit_recovers_exact_coefficients():
    lam = np.geomspace(10, 1e4, 12)
    y = PI2 * lam**2 - 3.0 * np.log(lam) + 0.5
    fit = fit_divergence(zip(lam, y))
    assert fit.c_quad == pytest.approx(PI2, rel=1e-12)
    assert fit.c_log == pytest.approx(-3.0, rel=1e-6)
    assert fit.accepted


def test_fit_rejects_wrong_structure():
    lam = np.geomspace(10, 1e4, 12)
    assert not fit_divergence(zip(lam, lam**3)).accepted
    assert not fit_divergence(zip(lam, np.sqrt(lam))).accepted


@pytest.mark.parametrize(
    "lam",
    [np.geomspace(10, 1e4, 4), np.geomspace(10, 50, 8), np.array([1, 1, 1, 1, 1, 1e3])],
)
def test_fit_input_validation(lam):
    with pytest.raises(DomainError):
        fit_divergence(zip(lam, lam))


def test_estimator_follows_sklearn_conventions():
    est = DivergenceRegressor(reject_tol=1e-2)
    assert est.get_params() == {"reject_tol": 1e-2, "min_samples": 6, "min_span": 1e2}
    twin = clone(est).set_params(min_samples=8)
    assert twin.min_samples == 8 and est.min_samples == 6
    with pytest.raises(NotFittedError):
        est.predict([10.0])
    lam = np.geomspace(10, 1e4, 12)
    y = 2 * np.log(lam) + 1
    est.fit(lam, y)
    assert np.allclose(est.predict(lam), y)
    assert est.score(lam, y) == pytest.approx(1.0)


def test_divergent_coefficients_of_basic_integrals():
    params = ModelParams()
    s1 = fit_divergence((c, amp.s1_zero(params, c).value) for c in GRID)
    s2 = fit_divergence((c, amp.s2(params, c).value) for c in GRID)
    assert s1.c_quad == pytest.approx(PI2, rel=1e-6)
    assert s1.c_log == pytest.approx(-2 * PI2, rel=1e-3)
    # the m^2/Lambda^2 tail is outside the basis and biases the fit slightly
    assert s2.c_log == pytest.approx(2 * PI2, rel=1e-4)
    assert abs(s2.c_quad) < 1e-9


def test_cutoff_grid_validation():
    with pytest.raises(DomainError):
        CutoffGrid.logspace(1e2, 1e4, 2)
    with pytest.raises(DomainError):
        CutoffGrid((1.0, 3.0, 2.0, 4.0, 5.0, 6.0))
    with pytest.raises(DomainError):
        CutoffGrid.logspace(1, 1e4, 9).check(ModelParams())
    assert len(GRID.scaled(2.0)) == len(GRID)


def test_headline_beta_lambda(report):
    assert report.beta_lambda_coeff == pytest.approx(4 * PI2, rel=2e-2)
    assert report.beta_lambda_fit.accepted


def test_z_and_gamma(report):
    assert report.Z == 1.0
    assert report.gamma == 0.0


def test_mass_shift_is_quadratically_divergent(report):
    # two planar-regular tadpoles: 2 lambda S1(0) ~ 2 lambda pi^2 Lambda^2
    assert report.beta_m_fit.c_quad == pytest.approx(2 * 0.1 * PI2, rel=1e-6)
    assert report.beta_m_fit.c_quad > 0


def test_beta_a_witness(report):
    w = report.beta_a_witness
    assert not w.trivial
    assert w.log_to_finite < 1e-3
    assert w.fit.accepted
    assert all(math.isfinite(s) for s in w.sup_F)
    assert w.sup_stability < 1e-3
    assert report.beta_a == w.fit.c_log


def test_beta_a_trivial_without_a():
    rep = beta_report(ModelParams(a=0.0), GRID, with_ratios=False)
    assert rep.beta_a == 0.0 and rep.beta_a_witness.trivial
    assert rep.beta_lambda_coeff == pytest.approx(4 * PI2, rel=2e-2)


def test_commutative_ratios(report):
    r = report.ratios
    assert r.beta_lambda_ratio == pytest.approx(1.0, rel=1e-3)
    assert r.mass_quad_ratio == pytest.approx(2 / 3, rel=1e-9)
    assert r.sigma_plr_over_sigma_at_zero == pytest.approx(2 / 3, rel=1e-12)


def test_scheme_stability_under_grid_shift(report):
    shifted = beta_report(ModelParams(), GRID.scaled(2.0), with_ratios=False)
    assert shifted.beta_lambda_coeff == pytest.approx(report.beta_lambda_coeff, rel=1e-2)


def test_report_serialises(report):
    doc = json.loads(json.dumps(report.to_json_dict(), allow_nan=False))
    assert {"Z", "gamma", "beta_lambda_coeff", "beta_m", "beta_a", "beta_a_witness"} <= set(doc)
    assert len(report.samples) == len(GRID)
    assert len(report.samples[0]) == len(report.SAMPLE_COLUMNS)


def test_threaded_evaluation_matches_serial(report):
    rep = beta_report(ModelParams(), GRID, workers=4, with_ratios=False)
    assert rep.beta_lambda_coeff == report.beta_lambda_coeff
    assert rep.samples == report.samples


def test_rejected_fit_names_quantity(monkeypatch):
    monkeypatch.setattr(rg_flow, "gamma_four", lambda params, c, at_pm=True: math.sqrt(c))
    with pytest.raises(FitRejectedError) as info:
        beta_report(ModelParams(), GRID)
    assert info.value.quantity == "Gamma4"
