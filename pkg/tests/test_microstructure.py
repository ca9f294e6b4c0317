import numpy as np
import pytest

from hallhom import microstructure as ms
from hallhom.exceptions import GridMismatch, NonPeriodicDirection


def test_profile_piecewise_average():
    p = ms.Profile1D.piecewise([1.0, 3.0], fractions=[0.25, 0.75])
    assert p.average() == pytest.approx(0.25 * 1.0 + 0.75 * 3.0)
    assert p.average(lambda v: 1.0 / v) == pytest.approx(0.25 + 0.75 / 3.0)


def test_profile_constant_flag():
    assert ms.Profile1D.constant(2.0).is_constant()
    assert not ms.Profile1D.piecewise([1.0, 2.0]).is_constant()


def test_profile_round_trip():
    p = ms.Profile1D("trig", {"cos": [0.4, 0.1], "sin": [-0.2]})
    q = ms.Profile1D.from_dict(p.to_dict())
    t = np.linspace(0, 1, 17)
    assert np.allclose(p(t), q(t))


def test_material_spec_json_round_trip():
    spec = ms.checkerboard4([1, 2, 3, 4], [1.0, 1.0, 0.5, 0.5])
    again = ms.MaterialSpec.from_json(spec.to_json())
    assert again == spec


def test_material_spec_unknown_variant():
    with pytest.raises(ValueError):
        ms.MaterialSpec("Perforated", {})


def test_invariant_axes_are_collapsed():
    assert ms.sample(ms.homogeneous(2.0, 0.5), 8).sigma.shape == (1, 1, 1, 3, 3)
    assert ms.sample(ms.laminate_rank1(0.5, 2.0), 8).sigma.shape == (8, 1, 1, 3, 3)
    assert ms.sample(ms.checkerboard4([1, 2, 3, 4]), 8).sigma.shape == (8, 8, 1, 3, 3)


def test_checkerboard_quadrant_layout():
    field = ms.sample(ms.checkerboard4([10.0, 20.0, 30.0, 40.0]), 8)
    # voxel centers at (i + 1/2)/8; index 6 -> 0.8125, index 1 -> 0.1875
    assert field.sigma[6, 6, 0, 0, 0] == 10.0   # y1 > 1/2, y2 > 1/2
    assert field.sigma[6, 1, 0, 0, 0] == 20.0   # y1 > 1/2, y2 < 1/2
    assert field.sigma[1, 1, 0, 0, 0] == 30.0   # y1 < 1/2, y2 < 1/2
    assert field.sigma[1, 6, 0, 0, 0] == 40.0   # y1 < 1/2, y2 > 1/2


def test_laminate_volume_fraction():
    theta = 0.25
    field = ms.sample(ms.laminate_rank1(theta, 2.0), 16)
    a = field.sigma[:, 0, 0, 0, 0]
    assert np.mean(a == 1.0 / theta) == pytest.approx(theta)


def test_misaligned_interfaces_warn():
    spec = ms.laminate_rank1(0.3, 2.0)
    with pytest.warns(UserWarning):
        ms.sample(spec, 16)  # 0.3 * 16 is not an integer


def test_smooth_random_deterministic():
    f1 = ms.sample_smooth_random(5, 2, 4.0, 1.0, 16)
    f2 = ms.sample_smooth_random(5, 2, 4.0, 1.0, 16)
    f3 = ms.sample_smooth_random(6, 2, 4.0, 1.0, 16)
    assert np.array_equal(f1.sigma, f2.sigma)
    assert not np.array_equal(f1.sigma, f3.sigma)
    lo, hi = f1.eig_band()
    assert lo >= 1.0 / 4.0 - 1e-12 and hi <= 4.0 + 1e-12


def test_columnar_tensor_product_needs_integer_direction():
    f = ms.Profile1D("trig", {"cos": [0.3]})
    g = ms.Profile1D("trig", {"sin": [0.2]})
    with pytest.raises(NonPeriodicDirection):
        ms.sample(ms.columnar_from_tensor_product(f, g, (1.0, 0.5), 1.0), 16)


def test_grid_field_bytes_round_trip(tmp_path):
    field = ms.sample_smooth_random(1, 2, 3.0, 1.0, 8)
    again = ms.GridField.from_bytes(field.to_bytes())
    assert np.array_equal(field.sigma, again.sigma)
    assert np.array_equal(field.s, again.s)
    assert field.content_hash() == again.content_hash()
    path = tmp_path / "field.bin"
    field.save(path)
    loaded = ms.GridField.load(path)
    assert loaded.content_hash() == field.content_hash()


def test_grid_field_rejects_shape_mismatch():
    field = ms.sample_smooth_random(1, 2, 3.0, 1.0, 8)
    with pytest.raises(GridMismatch):
        ms.GridField(resolution=field.resolution, sigma=field.sigma,
                     s=field.s[:4])


def test_quad_at_polarization():
    field = ms.sample(ms.laminate_rank1(0.5, 2.0), 8)
    rng = np.random.default_rng(0)
    quad = {f"{i}{j}": rng.normal(size=field.sigma.shape)
            for i in range(3) for j in range(i, 3)}
    for k in quad:
        quad[k] = quad[k] + np.swapaxes(quad[k], -1, -2)
    f2 = ms.GridField(resolution=8, sigma=field.sigma, s=field.s, quad=quad)
    h = np.array([0.3, -0.2, 0.5])
    expect = sum(
        quad[f"{i}{j}"] * (h[i] * h[j] if i == j else h[i] * h[j])
        for i in range(3) for j in range(i, 3)
    )
    assert np.allclose(f2.quad_at(h), expect)
