import numpy as np
import pytest

from hallhom import effective as ef
from hallhom import microstructure as ms
from hallhom import solver as sv
from hallhom import tensor3 as t3


@pytest.fixture(scope="module")
def smooth_corr():
    field = ms.sample_smooth_random(2, 2, 3.0, 1.0, 16)
    cfg = sv.SolverConfig(tol=1e-10)
    corr = sv.solve_p0(field, cfg)
    return corr, cfg


def test_sigma_star_symmetric_and_bounded(smooth_corr):
    corr, _ = smooth_corr
    sigma_star, asym = ef.effective_conductivity(corr, with_asym=True)
    assert np.allclose(sigma_star, sigma_star.T)
    assert asym <= 1e-8
    # Voigt-Reuss bounds: <sigma^-1>^-1 <= sigma* <= <sigma>
    sig = corr.field.sigma
    voigt = sig.mean(axis=(0, 1, 2))
    reuss = np.linalg.inv(np.linalg.inv(sig).mean(axis=(0, 1, 2)))
    assert np.linalg.eigvalsh(voigt - sigma_star).min() >= -1e-8
    assert np.linalg.eigvalsh(sigma_star - reuss).min() >= -1e-8


def test_hall_dual_route_consistent(smooth_corr):
    corr, _ = smooth_corr
    sigma_star = ef.effective_conductivity(corr)
    s_star = ef.effective_s_matrix(corr)
    r_star, disc = ef.effective_hall(corr, sigma_star, s_star)
    assert disc <= 1e-6
    assert np.allclose(t3.s_from_hall(sigma_star, r_star), s_star, atol=1e-6)


def test_onsager_parity_of_magnetoresistance(smooth_corr):
    corr, cfg = smooth_corr
    h = np.array([0.3, -0.5, 0.2])
    corr = sv.solve_p1(corr, h, cfg)
    m_plus = ef.effective_magnetoresistance(corr)
    corr = sv.solve_p1(corr, -h, cfg)
    m_minus = ef.effective_magnetoresistance(corr)
    assert np.allclose(m_plus, m_plus.T, atol=1e-12)
    assert np.allclose(m_plus, m_minus, atol=1e-9)


def test_first_order_term_flips_sign(smooth_corr):
    corr, _ = smooth_corr
    s_star = ef.effective_s_matrix(corr)
    h = np.array([0.1, 0.7, -0.3])
    E = t3.hodge(s_star @ h)
    assert np.allclose(E, -E.T)
    assert np.allclose(t3.hodge(s_star @ -h), -E)


def test_gap_psd_and_smaller_than_local_term(smooth_corr):
    corr, cfg = smooth_corr
    h = np.array([0.0, 0.4, 0.9])
    corr = sv.solve_p1(corr, h, cfg)
    gap = ef.dissipation_gap(corr)
    sigma_star = ef.effective_conductivity(corr)
    tol = ef.psd_tolerance(gap, sigma_star, h, 1e-10)
    assert np.allclose(gap, gap.T)
    assert np.linalg.eigvalsh(gap).min() >= -tol


def test_curl_defect_zero_for_homogeneous():
    field = ms.sample(ms.homogeneous(2.0, 0.7), 8)
    corr = sv.solve_p0(field)
    assert ef.curl_defect(corr, np.array([0, 0, 1.0])) <= 1e-12


def test_magnetoresistance_scales_quadratically(smooth_corr):
    corr, cfg = smooth_corr
    h = np.array([0.2, 0.1, 0.5])
    corr = sv.solve_p1(corr, h, cfg)
    m1 = ef.effective_magnetoresistance(corr)
    corr = sv.solve_p1(corr, 2 * h, cfg)
    m2 = ef.effective_magnetoresistance(corr)
    assert np.allclose(m2, 4.0 * m1, atol=1e-8)


def test_report_json_round_trip(smooth_corr):
    corr, cfg = smooth_corr
    h = np.array([0, 0, 0.5])
    corr = sv.solve_p1(corr, h, cfg)
    rep = ef.assemble_report(corr, h)
    again = ef.EffectiveReport.from_json(rep.to_json())
    assert np.allclose(again.sigma_star, rep.sigma_star)
    assert np.allclose(again.gap, rep.gap)
    assert again.curl_defect == pytest.approx(rep.curl_defect)
    assert again.resolution == rep.resolution
