import numpy as np
import pytest

from hallhom import microstructure as ms
from hallhom import solver as sv
from hallhom.exceptions import GridMismatch, HallNotZero, NoConvergence


def _smooth(seed=0, N=16):
    return ms.sample_smooth_random(seed, 2, 3.0, 1.0, N)


def test_p0_mean_is_identity_and_residual_small():
    cfg = sv.SolverConfig(tol=1e-9)
    corr = sv.solve_p0(_smooth(), cfg)
    mean = corr.p0.mean(axis=(0, 1, 2))
    assert np.allclose(mean, np.eye(3), atol=1e-12)
    assert corr.residual0 <= 1e-9


def test_homogeneous_p0_is_identity():
    field = ms.sample(ms.homogeneous(2.0, 0.5), 8)
    corr = sv.solve_p0(field)
    assert np.allclose(corr.p0, np.eye(3), atol=1e-13)
    assert corr.residual0 <= 1e-13


def test_discontinuous_even_grid_converges():
    # even grids + discontinuous coefficients exercise the Nyquist handling
    field = ms.sample(ms.checkerboard4([1, 2, 3, 4], 1.0), 32)
    corr = sv.solve_p0(field, sv.SolverConfig(tol=1e-10))
    assert corr.residual0 <= 1e-10


def test_p1_linear_in_h():
    cfg = sv.SolverConfig(tol=1e-11)
    corr = sv.solve_p0(_smooth(3), cfg)
    h = np.array([0.4, -0.2, 0.1])
    p1_a = sv.solve_p1(corr, h, cfg).p1.copy()
    p1_b = sv.solve_p1(corr, 2.0 * h, cfg).p1
    assert np.allclose(p1_b, 2.0 * p1_a, atol=1e-8)


def test_p1_mean_free():
    cfg = sv.SolverConfig(tol=1e-10)
    corr = sv.solve_p0(_smooth(4), cfg)
    corr = sv.solve_p1(corr, np.array([0, 0, 1.0]), cfg)
    assert np.allclose(corr.p1.mean(axis=(0, 1, 2)), 0.0, atol=1e-12)


def test_no_convergence_raises():
    field = ms.sample(ms.checkerboard4([1, 50, 3, 4], 1.0), 32)
    with pytest.raises(NoConvergence) as exc:
        sv.solve_p0(field, sv.SolverConfig(tol=1e-12, max_iter=3))
    assert exc.value.iterations <= 3 or exc.value.residual > 1e-12


def test_p2_requires_zero_hall():
    field = _smooth(5)
    cfg = sv.SolverConfig()
    corr = sv.solve_p0(field, cfg)
    with pytest.raises(HallNotZero):
        sv.solve_p2_zero_hall(corr, np.array([0, 0, 1.0]), cfg)


def test_collapse_removes_constant_axes():
    field = ms.sample(ms.checkerboard4([1, 2, 3, 4], 1.0), 16)
    assert sv.collapse(field).shape == (16, 16, 1)
    field2 = _smooth(6, 8)
    assert sv.collapse(field2).shape == (8, 8, 8)


def test_basic_fixed_point_agrees_with_cg():
    field = ms.sample(ms.checkerboard4([1.0, 1.5, 1.2, 0.8], 0.0), 16)
    a = sv.solve_p0(field, sv.SolverConfig(tol=1e-10, scheme="conjugate_gradient"))
    b = sv.solve_p0(field, sv.SolverConfig(tol=1e-10, scheme="basic_fixed_point",
                                           max_iter=20000))
    assert np.allclose(a.p0, b.p0, atol=1e-7)


def test_corrector_cache_round_trip(tmp_path):
    field = _smooth(7, 8)
    cfg = sv.SolverConfig(tol=1e-9)
    corr = sv.solve_p0(field, cfg)
    corr = sv.solve_p1(corr, np.array([0.2, 0, 0.5]), cfg)
    path = tmp_path / "corr.bin"
    corr.save(path)
    again = sv.CorrectorSet.load(path, corr.field)
    assert np.allclose(again.p0, corr.p0)
    assert np.allclose(again.p1, corr.p1)
    assert np.allclose(again.h, corr.h)


def test_corrector_cache_rejects_other_field(tmp_path):
    cfg = sv.SolverConfig(tol=1e-8)
    corr = sv.solve_p0(_smooth(8, 8), cfg)
    path = tmp_path / "corr.bin"
    corr.save(path)
    other = sv.collapse(_smooth(9, 8))
    with pytest.raises(GridMismatch):
        sv.CorrectorSet.load(path, other)


def test_residual_matches_reported():
    field = _smooth(10, 8)
    cfg = sv.SolverConfig(tol=1e-9)
    corr = sv.solve_p0(field, cfg)
    assert sv.residual(corr.field, corr.p0) == pytest.approx(corr.residual0, rel=1e-6)
