import numpy as np
import pytest
from sklearn.base import clone

from hallhom import Homogenizer
from hallhom import microstructure as ms
from hallhom import oracles as oc


@pytest.fixture(scope="module")
def fitted():
    est = Homogenizer(resolution=16, tol=1e-10)
    return est.fit(ms.smooth_random(seed=1, modes=2, kappa=3.0))


def test_sklearn_params_round_trip():
    est = Homogenizer(resolution=24, tol=1e-7)
    params = est.get_params()
    assert params["resolution"] == 24 and params["tol"] == 1e-7
    est2 = clone(est)
    assert est2.get_params() == params
    est2.set_params(resolution=48)
    assert est2.resolution == 48


def test_fit_exposes_effective_tensors(fitted):
    assert fitted.sigma_eff_.shape == (3, 3)
    assert np.allclose(fitted.sigma_eff_, fitted.sigma_eff_.T)
    assert fitted.hall_discrepancy_ <= 1e-6
    assert fitted.hall_eff_.shape == (3, 3)


def test_fit_accepts_grid_field():
    field = ms.sample_smooth_random(1, 2, 3.0, 1.0, 16)
    est = Homogenizer(tol=1e-10).fit(field)
    ref = Homogenizer(resolution=16, tol=1e-10).fit(
        ms.smooth_random(seed=1, modes=2, kappa=3.0))
    assert np.allclose(est.sigma_eff_, ref.sigma_eff_, atol=1e-10)


def test_fit_rejects_other_types():
    with pytest.raises(TypeError):
        Homogenizer().fit(np.ones((4, 4)))


def test_magnetoresistance_cached_per_direction(fitted):
    h = np.array([0, 0, 0.5])
    m1 = fitted.magnetoresistance(h)
    assert len(fitted._p1_cache) == 1
    m2 = fitted.magnetoresistance(h)
    assert len(fitted._p1_cache) == 1
    assert np.allclose(m1, m2)


def test_gap_psd(fitted):
    gap = fitted.dissipation_gap(np.array([0.3, 0.1, 0.6]))
    assert np.linalg.eigvalsh(gap).min() >= -1e-6


def test_laminate_matches_oracle_through_estimator():
    theta, alpha2, h3 = 0.5, 2.0, 0.3
    est = Homogenizer(resolution=16, tol=1e-10)
    est.fit(ms.laminate_rank1(theta, alpha2))
    m = est.magnetoresistance(np.array([0, 0, h3]))
    assert np.allclose(m, oc.laminate_magnetoresistance(theta, alpha2, h3), atol=1e-12)


def test_report_assembly(fitted):
    rep = fitted.report(np.array([0, 0, 0.5]))
    assert rep.resolution == 16
    assert rep.gap is not None and rep.curl_defect is not None
