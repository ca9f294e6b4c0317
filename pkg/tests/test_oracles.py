import numpy as np
import pytest

from hallhom import microstructure as ms
from hallhom import oracles as oc
from hallhom.exceptions import ConditionRViolated


RNG = np.random.default_rng(13)


def test_laminate_resistivity_inverts_sigma():
    for _ in range(100):
        theta = RNG.uniform(0.05, 0.95)
        alpha2 = RNG.uniform(0.1, 10.0)
        h3 = RNG.uniform(-2.0, 2.0)
        sig = oc.laminate_sigma_star(theta, alpha2, h3)
        rho = oc.laminate_resistivity(theta, alpha2, h3)
        assert np.allclose(rho @ sig, np.eye(3), atol=1e-12)


def test_laminate_magnetoresistance_symmetric_even():
    m = oc.laminate_magnetoresistance(0.4, 3.0, 0.7)
    assert np.allclose(m, m.T)
    assert np.allclose(m, oc.laminate_magnetoresistance(0.4, 3.0, -0.7))
    assert m[2, 2] == pytest.approx(0.0, abs=1e-15)


def test_laminate_gap_p1_nonnegative_on_log_grid():
    thetas = np.linspace(0.03, 0.97, 20)
    alphas = np.logspace(-2, 2, 20)
    worst = np.inf
    for th in thetas:
        for a2 in alphas:
            d11, d22 = oc.laminate_gap_2p(th, a2, 1.0, 1)
            worst = min(worst, d11, d22)
    assert worst >= -1e-12


def test_laminate_gap_p1_d22_identically_zero():
    for _ in range(50):
        _, d22 = oc.laminate_gap_2p(RNG.uniform(0.1, 0.9), RNG.uniform(0.2, 5.0), 1.0, 1)
        assert d22 == pytest.approx(0.0, abs=1e-12)


def test_laminate_gap_sign_change_with_p():
    # p even + theta small: entries get mixed signs; p odd: both >= 0 region
    d11, d22 = oc.laminate_gap_2p(1e-6, 100.0, 1.0, 2)
    assert d11 > 0 and d22 < 0
    d11, d22 = oc.laminate_gap_2p(0.2, 5.0, 1.0, 2)
    assert d11 < 0 and d22 < 0
    d11, d22 = oc.laminate_gap_2p(0.2, 5.0, 1.0, 3)
    assert d11 > 0 and d22 > 0


def test_zero_hall_series_mixing_identity():
    # sigma*^(4) must satisfy sigma* rho*^(4) sigma* = s2 s0^-1 s2 - s4
    theta, alpha2 = 0.5, 4.0
    coeffs = oc.laminate_zero_hall_sigma_star_coeffs(theta, alpha2, 4)
    s0, s2, s4 = coeffs[0], coeffs[2], coeffs[4]
    from hallhom.tensor3 import series_invert_coeffs
    rho = series_invert_coeffs(coeffs)
    lhs = s0 @ rho[4] @ s0
    rhs = s2 @ np.linalg.solve(s0, s2) - s4
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_zero_hall_field_has_even_orders_only():
    field = oc.laminate_zero_hall_field(0.5, 4.0, 16)
    assert field.s is None
    assert set(field.higher) == {2, 3, 4} or set(field.higher) == {2, 4}
    if 3 in field.higher:
        assert np.max(np.abs(field.higher[3])) == 0.0


def test_layered_d_coefficients_two_phase():
    prof = oc.LayeredProfile(np.array([1.0, 0, 0]),
                             ms.Profile1D.piecewise([1.0, 2.0]),
                             ms.Profile1D.piecewise([1.0, 2.0]))
    d1, d2, d3 = oc.layered_d_coefficients(prof)
    m = prof.averages()
    assert d1 == pytest.approx((m["ar2"] - m["ar"] ** 2 / m["a"]) / m["inv_a"] ** 2)
    assert d2 == pytest.approx(m["a3r2"] - m["a2r"] ** 2 / m["a"])
    assert d3 == pytest.approx((m["a2r2"] - m["ar"] * m["a2r"] / m["a"]) / m["inv_a"])


def test_layered_gap_psd_random_profiles():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        vals_a = rng.uniform(0.3, 3.0, 3)
        vals_r = rng.uniform(-2.0, 2.0, 3)
        prof = oc.LayeredProfile(np.array([1.0, 0, 0]),
                                 ms.Profile1D.piecewise(list(vals_a), [0.2, 0.3, 0.5]),
                                 ms.Profile1D.piecewise(list(vals_r), [0.2, 0.3, 0.5]))
        h = rng.normal(size=3)
        gap = oc.layered_gap(prof, h)
        assert np.allclose(gap, gap.T)
        assert np.linalg.eigvalsh(gap).min() >= -1e-10


def test_layered_classify_matches_gap():
    xi = np.array([1.0, 0, 0])
    const_r = ms.Profile1D.constant(1.5)
    var_a = ms.Profile1D.piecewise([1.0, 2.0])
    # a r constant, r varying
    var_r = ms.Profile1D.piecewise([2.0, 1.0])
    cases = [
        (oc.LayeredProfile(xi, var_a, const_r), np.array([0, 1.0, 0]),
         oc.LayeredBranch.ORTH_R_CONST),
        (oc.LayeredProfile(xi, var_a, var_r), np.array([1.0, 0, 0]),
         oc.LayeredBranch.PAR_AR_CONST),
        (oc.LayeredProfile(xi, var_a, var_r), np.array([1.0, 1.0, 0]),
         oc.LayeredBranch.NOT_EQUAL),
        (oc.LayeredProfile(xi, var_a, var_r), np.zeros(3), oc.LayeredBranch.ZERO_H),
    ]
    for prof, h, expect in cases:
        branch = oc.layered_equality_classify(prof, h)
        assert branch == expect
        gap_zero = np.linalg.norm(oc.layered_gap(prof, h)) <= 1e-12
        assert gap_zero == (expect != oc.LayeredBranch.NOT_EQUAL)


def test_columnar_constant_r_axial_field():
    field = ms.sample(ms.columnar_random(3, modes=2, kappa=3.0, r=2.0), 32)
    sigma2d = field.sigma[:, :, 0, 0, 0]
    r2d = np.full_like(sigma2d, 2.0)
    v = oc.columnar_equality_check(sigma2d, r2d, np.array([0, 0, 1.0]))
    assert v.equal and v.branch == "axial_r_const"


def test_columnar_separable_in_plane_field():
    f = ms.Profile1D("exp_trig", {"cos": [0.4]})
    g = ms.Profile1D("exp_trig", {"sin": [0.3]})
    spec = ms.columnar_from_tensor_product(f, g, (1, 0), 0.8)
    field = ms.sample(spec, 32)
    sigma2d = field.sigma[:, :, 0, 0, 0]
    r2d = -field.s[:, :, 0, 0, 0] / sigma2d**2
    v = oc.columnar_equality_check(sigma2d, r2d, np.array([1.0, 0, 0]))
    assert v.equal and v.branch == "planar_separable"
    # breaking the Hall profile must break equality
    v2 = oc.columnar_equality_check(sigma2d, np.full_like(r2d, 0.8),
                                    np.array([1.0, 0, 0]))
    assert not v2.equal


def test_columnar_zero_r_rejected():
    sigma2d = np.ones((8, 8))
    with pytest.raises(ConditionRViolated):
        oc.columnar_equality_check(sigma2d, np.zeros((8, 8)), np.array([0, 0, 1.0]))


def test_checkerboard_product_condition():
    C = 0.7
    # alpha1 alpha3 = alpha2 alpha4 and two-level Hall profile: equality
    equal, branch = oc.checkerboard_equality_check(
        [2, 1, 2, 4], [2 * C, 2 * C, C, C], np.array([1.0, 0, 0]))
    assert equal and branch == "in_plane_product_and_hall"
    # product condition fails: 1*3 != 2*4
    equal, branch = oc.checkerboard_equality_check(
        [1, 2, 3, 4], 1.0, np.array([1.0, 0, 0]))
    assert not equal and branch == "product_condition_fails"
    # axial field only needs constant r
    equal, branch = oc.checkerboard_equality_check([1, 2, 3, 4], 1.0,
                                                   np.array([0, 0, 1.0]))
    assert equal and branch == "axial_r_const"
    equal, _ = oc.checkerboard_equality_check([1, 2, 3, 4], [1, 1, 2, 2],
                                              np.array([0, 0, 1.0]))
    assert not equal


def test_checkerboard_zero_r_rejected():
    with pytest.raises(ConditionRViolated):
        oc.checkerboard_equality_check([1, 2, 3, 4], [1, 0, 1, 1],
                                       np.array([0, 0, 1.0]))


def test_checkerboard_factorization_reconstructs_alpha():
    alpha = np.array([2.0, 1.0, 2.0, 4.0])
    f, g = oc.checkerboard_factorization(alpha)
    # quadrant values are f(y1) g(y2); tuples are (upper, lower) half values
    recon = np.array([f[0] * g[0], f[0] * g[1], f[1] * g[1], f[1] * g[0]])
    assert np.allclose(recon, alpha)
