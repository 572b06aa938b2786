import math

import numpy as np
import pytest

from besovfbp.phantoms import shepp_logan, smooth_phantom, unit_disk
from besovfbp.transforms import (
    DIAM_SQUARE,
    Image,
    Sinogram,
    SinogramGrid,
    back_project,
    discrete_lp_norm,
    pixel_centers,
    sample_sinogram,
    sinogram_lp_norm,
)


@pytest.mark.parametrize("k", [1, 3, 8, 64])
def test_grid_coupling_from_k(k):
    g = SinogramGrid.from_k(k)
    assert g.d == pytest.approx(1 / k)
    assert g.M == k and g.N == math.ceil(math.pi * k)
    assert g.shape == (2 * k + 1, g.N)
    assert g.t[0] == pytest.approx(-1.0) and g.t[-1] == pytest.approx(1.0)
    assert g.theta[-1] < math.pi
    assert g.cell == pytest.approx(g.d * math.pi / g.N)


def test_grid_validation():
    with pytest.raises(ValueError):
        SinogramGrid.from_k(0)
    with pytest.raises(ValueError):
        SinogramGrid.from_k(2.5)
    with pytest.raises(ValueError):
        SinogramGrid(d=0.1, M=10, N=31, L=math.pi * 10)  # N must be ceil(pi M) = 32
    with pytest.raises(ValueError):
        SinogramGrid(d=0.2, M=10, N=32, L=math.pi * 10)


def test_sinogram_validation():
    g = SinogramGrid.from_k(2)
    with pytest.raises(ValueError):
        Sinogram(g, np.zeros((4, g.N)))
    bad = np.zeros(g.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Sinogram(g, bad)


def test_sample_sinogram_examples():
    g = SinogramGrid.from_k(6)
    sino = sample_sinogram(unit_disk(), g)
    np.testing.assert_allclose(sino.values[g.M], 2.0)
    np.testing.assert_array_equal(sino.values[0], 0.0)
    np.testing.assert_array_equal(sino.values[-1], 0.0)
    # rotational symmetry: every row constant across angles
    np.testing.assert_allclose(sino.values, sino.values[:, :1] * np.ones((1, g.N)), atol=1e-15)


def test_sample_sinogram_is_exact_analytic():
    g = SinogramGrid.from_k(4)
    ph = shepp_logan()
    sino = sample_sinogram(ph, g)
    m, n = 3, 5
    assert sino.values[m, n] == ph.radon_analytic(g.t[m], g.theta[n])


def test_pixel_centers_and_image():
    np.testing.assert_allclose(pixel_centers(4), [-0.75, -0.25, 0.25, 0.75])
    with pytest.raises(ValueError):
        pixel_centers(0)
    with pytest.raises(ValueError):
        Image(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        Image(np.full((2, 2), np.inf))
    img = Image(np.ones((5, 5)))
    assert img.side == 5 and img.pixel_area == pytest.approx(0.16)
    assert (img - img).values.sum() == 0.0


@pytest.mark.parametrize("p, expected", [(1, 4.0), (2, 2.0), (math.inf, 1.0), (4, 4 ** 0.25)])
def test_discrete_lp_norm_of_ones(p, expected):
    assert discrete_lp_norm(np.ones((16, 16)), p) == pytest.approx(expected)
    assert Image(np.ones((7, 7))).lp_norm(p) == pytest.approx(expected)


def test_lp_norms_reject_small_p():
    with pytest.raises(ValueError):
        discrete_lp_norm(np.ones((4, 4)), 0.5)
    with pytest.raises(ValueError):
        sinogram_lp_norm(Sinogram(SinogramGrid.from_k(1), np.ones((3, 4))), 0.9)


def test_sinogram_lp_norm_examples():
    g = SinogramGrid.from_k(5)
    ones = Sinogram(g, np.ones(g.shape))
    assert sinogram_lp_norm(ones, 1) == pytest.approx((2 * g.M + 1) * g.d * math.pi)
    assert sinogram_lp_norm(ones.with_values(np.zeros(g.shape)), 2) == 0.0
    single = np.zeros(g.shape)
    single[2, 3] = 1.0
    assert sinogram_lp_norm(ones.with_values(single), 1) == pytest.approx(g.d * math.pi / g.N)
    assert sinogram_lp_norm(ones.with_values(-3 * single), math.inf) == 3.0


def test_sinogram_norm_approximates_continuous_norm():
    # unit disk: ||R chi||_2^2 = pi * int_{-1}^{1} 4 (1 - t^2) dt = 16 pi / 3
    g = SinogramGrid.from_k(64)
    got = sinogram_lp_norm(sample_sinogram(unit_disk(), g), 2)
    assert got == pytest.approx(math.sqrt(16 * math.pi / 3), rel=1e-3)


@pytest.mark.parametrize("interp", ["linear", "cubic"])
def test_back_project_constant(interp):
    g = SinogramGrid.from_k(8)
    img = back_project(np.full(g.shape, 2.5), g, 16, interp=interp)
    c = pixel_centers(16)
    X, Y = np.meshgrid(c, c)
    # every line through a pixel of the inscribed disk lies in the sampled range |t| <= 1
    inside = X**2 + Y**2 <= 1.0
    np.testing.assert_allclose(img.values[inside], 2.5, rtol=1e-13)


def test_back_project_single_column():
    g = SinogramGrid.from_k(4)
    vals = np.zeros(g.shape)
    vals[:, 0] = 7.0  # theta_0 = 0, lines x = t
    img = back_project(vals, g, 9)
    # column 4 of a 9-pixel grid sits on x = 0
    np.testing.assert_allclose(img.values[:, 4], 7.0 / g.N, rtol=1e-14)


def test_back_project_out_of_range_is_zero():
    g = SinogramGrid.from_k(2)  # d = 1/2, M = 2, N = 7
    vals = np.zeros(g.shape)
    vals[:, 2] = 1.0  # theta_2 = 2 pi / 7
    # the corner pixel (0.875, 0.875) lies on t = 0.875 (cos + sin)(theta_2) ~ 1.23 > M d
    assert back_project(vals, g, 8).values[-1, -1] == 0.0
    wide = np.zeros((2 * 4 + 1, g.N))
    wide[:, 2] = 1.0
    assert back_project(wide, g, 8, half_count=4).values[-1, -1] == pytest.approx(1.0 / g.N)


def test_back_project_shape_and_interp_errors():
    g = SinogramGrid.from_k(3)
    with pytest.raises(ValueError):
        back_project(np.zeros((6, g.N)), g, 8)
    with pytest.raises(ValueError):
        back_project(np.zeros(g.shape), g, 8, interp="nearest")


@pytest.mark.parametrize("interp", ["linear", "cubic"])
def test_back_project_linearity(interp):
    g = SinogramGrid.from_k(6)
    rng = np.random.default_rng(2)
    g1, g2 = rng.normal(size=(2, *g.shape))
    a, b = 1.7, -0.3
    lhs = back_project(a * g1 + b * g2, g, 24, interp=interp).values
    rhs = a * back_project(g1, g, 24, interp=interp).values + b * back_project(g2, g, 24, interp=interp).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_back_project_thread_invariance(monkeypatch):
    g = SinogramGrid.from_k(6)
    vals = sample_sinogram(smooth_phantom(1), g).values
    one = back_project(vals, g, 31, interp="cubic", n_jobs=1).values
    four = back_project(vals, g, 31, interp="cubic", n_jobs=4).values
    np.testing.assert_array_equal(one, four)
    monkeypatch.setenv("BESOVFBP_NUM_THREADS", "3")
    np.testing.assert_array_equal(back_project(vals, g, 31, interp="cubic").values, one)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_back_projection_lp_bound(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(20):
        g = SinogramGrid.from_k(int(rng.integers(2, 10)))
        sino = Sinogram(g, rng.normal(size=g.shape) * rng.uniform(0.1, 10))
        lhs = discrete_lp_norm(back_project(sino.values, g, 32), p)
        rhs = math.pi ** (-1 / p) * DIAM_SQUARE ** (1 / p) * sinogram_lp_norm(sino, p)
        assert lhs <= rhs * 1.05


def test_back_projection_sup_bound_is_exact_for_linear():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = SinogramGrid.from_k(int(rng.integers(1, 8)))
        vals = rng.uniform(-5, 5, g.shape)
        img = back_project(vals, g, 20)
        assert discrete_lp_norm(img, math.inf) <= np.abs(vals).max()
