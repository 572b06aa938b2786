import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from besovfbp.fbp import (
    FBPReconstructor,
    ReconstructionConfig,
    approximation_error,
    approximation_errors,
    extended_half_count,
    filter_sinogram,
    filter_taps,
    reconstruct,
)
from besovfbp.filters import Filter, Window, inv_fourier_filter
from besovfbp.phantoms import Phantom, shepp_logan, smooth_phantom, unit_disk
from besovfbp.transforms import Sinogram, SinogramGrid, sample_sinogram


def _direct_filter(values, filt, grid, H):
    """Oracle: the convolution sum written out term by term."""
    out = np.zeros((2 * H + 1, values.shape[1]))
    for i, m in enumerate(range(-H, H + 1)):
        for j, mp in enumerate(range(-grid.M, grid.M + 1)):
            out[i] += grid.d * float(inv_fourier_filter(filt, (m - mp) * grid.d)) * values[j]
    return out


def test_config_validation_and_coupling():
    cfg = ReconstructionConfig(8)
    assert cfg.L == pytest.approx(8 * math.pi)
    assert cfg.grid.M == 8 and cfg.grid.d == pytest.approx(1 / 8)
    assert cfg.filter.window == Window.smooth(5)
    for bad in (dict(k=0), dict(k=2.5), dict(k=4, interp="nearest"), dict(k=4, side=0)):
        with pytest.raises(ValueError):
            ReconstructionConfig(**bad)


@pytest.mark.parametrize("extend", [False, True])
def test_filter_matches_direct_summation(extend):
    grid = SinogramGrid.from_k(5)
    filt = Filter(Window.smooth(5), grid.L)
    rng = np.random.default_rng(0)
    sino = Sinogram(grid, rng.normal(size=grid.shape))
    fs = filter_sinogram(sino, filt, extend=extend)
    H = extended_half_count(grid) if extend else grid.M
    assert fs.half_count == H and fs.values.shape == (2 * H + 1, grid.N)
    np.testing.assert_allclose(fs.values, _direct_filter(sino.values, filt, grid, H), atol=1e-12)
    np.testing.assert_allclose(fs.t, np.arange(-H, H + 1) * grid.d)


def test_filter_examples():
    grid = SinogramGrid.from_k(6)
    filt = Filter(Window.smooth(5), grid.L)
    zero = filter_sinogram(Sinogram(grid, np.zeros(grid.shape)), filt)
    assert not zero.values.any()
    impulse = np.zeros(grid.shape)
    impulse[grid.M, :] = 1.0
    out = filter_sinogram(Sinogram(grid, impulse), filt).values
    np.testing.assert_allclose(out[:, 0], grid.d * inv_fourier_filter(filt, grid.t), rtol=1e-13)
    const = filter_sinogram(Sinogram(grid, np.full(grid.shape, 3.0)), filt).values
    m = grid.M  # centre row sees the full symmetric stencil
    expected = 3.0 * grid.d * sum(float(inv_fourier_filter(filt, j * grid.d)) for j in range(-grid.M, grid.M + 1))
    assert const[m, 0] == pytest.approx(expected, rel=1e-12)


def test_filter_taps_length_checked():
    grid = SinogramGrid.from_k(3)
    filt = Filter(Window.smooth(5), grid.L)
    assert len(filter_taps(filt, grid)) == 4 * grid.M + 1
    with pytest.raises(ValueError):
        filter_sinogram(Sinogram(grid, np.zeros(grid.shape)), filt, taps=np.zeros(5))


def test_extended_half_count_covers_corners():
    for k in (1, 4, 16, 64):
        g = SinogramGrid.from_k(k)
        assert extended_half_count(g) * g.d >= math.sqrt(2)


def test_reconstruct_zero_and_linearity():
    cfg = ReconstructionConfig(6, side=24, interp="cubic")
    grid = cfg.grid
    assert not reconstruct(Sinogram(grid, np.zeros(grid.shape)), cfg).values.any()
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(2, *grid.shape))
    lhs = reconstruct(Sinogram(grid, 2 * a - 5 * b), cfg).values
    rhs = 2 * reconstruct(Sinogram(grid, a), cfg).values - 5 * reconstruct(Sinogram(grid, b), cfg).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_reconstruct_rejects_wrong_grid():
    cfg = ReconstructionConfig(6, side=8)
    with pytest.raises(ValueError):
        reconstruct(Sinogram(SinogramGrid.from_k(5), np.zeros(SinogramGrid.from_k(5).shape)), cfg)


def test_disk_centre_value():
    # f * K_L(0) is within O(L^-2) of f(0) = 1 for the C^1 disk profile
    cfg = ReconstructionConfig(32, interp="cubic", side=33)
    img = reconstruct(sample_sinogram(unit_disk(2), cfg.grid), cfg).values
    assert img[16, 16] == pytest.approx(1.0, rel=0.02)


def test_zero_phantom_has_zero_error():
    empty = Phantom((), name="empty")
    assert approximation_error(empty, ReconstructionConfig(4, side=16), 2) == 0.0


def test_error_decreases_with_k_and_nu_ordering():
    ph = shepp_logan()
    errs = [approximation_error(ph, ReconstructionConfig(k, side=128), 2) for k in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    for p in (1.0, 2.0):
        e5 = approximation_error(ph, ReconstructionConfig(16, Window.smooth(5), side=128), p)
        e7 = approximation_error(ph, ReconstructionConfig(16, Window.smooth(7), side=128), p)
        assert e5 < e7


def test_approximation_errors_share_one_reconstruction():
    cfg = ReconstructionConfig(8, side=32)
    ph = smooth_phantom(1)
    many = approximation_errors(ph, cfg, [1.0, 2.0, math.inf])
    assert many[2.0] == approximation_error(ph, cfg, 2.0)
    assert many[math.inf] >= many[2.0] / 2  # ||.||_2 <= |Omega|^(1/2) ||.||_inf


def test_cubic_and_linear_converge_together():
    ph = smooth_phantom(2)
    diffs = []
    for k in (8, 16, 32):
        sino = sample_sinogram(ph, SinogramGrid.from_k(k))
        lin = reconstruct(sino, ReconstructionConfig(k, interp="linear", side=96)).values
        cub = reconstruct(sino, ReconstructionConfig(k, interp="cubic", side=96)).values
        diffs.append(np.sqrt(np.mean((lin - cub) ** 2) * 4))
    assert diffs[0] / diffs[1] >= 2 and diffs[1] / diffs[2] >= 2


def test_extend_removes_corner_truncation():
    ph = smooth_phantom(1)
    errs = {}
    for ext in (False, True):
        cfg = ReconstructionConfig(32, side=64, interp="cubic", extend=ext)
        errs[ext] = approximation_error(ph, cfg, 1.0)
    assert errs[True] < errs[False]


# --- estimator API -------------------------------------------------------------


def test_estimator_params_and_clone():
    est = FBPReconstructor(k=8, nu=7, side=32, interp="cubic")
    params = est.get_params()
    assert params["k"] == 8 and params["nu"] == 7 and params["extend"] is True
    twin = clone(est)
    assert twin.get_params() == params and not hasattr(twin, "grid_")
    est.set_params(k=4)
    assert est.k == 4


def test_estimator_not_fitted():
    with pytest.raises(NotFittedError):
        FBPReconstructor().transform(np.zeros((3, 4)))


def test_estimator_matches_functional_pipeline():
    est = FBPReconstructor(k=8, side=40, interp="cubic").fit()
    assert est.grid_.M == 8 and est.half_count_ == extended_half_count(est.grid_)
    assert len(est.taps_) == 2 * (est.grid_.M + est.half_count_) + 1
    sino = est.simulate(smooth_phantom(1))
    img = est.transform(sino)
    cfg = ReconstructionConfig(8, Window.smooth(5), "cubic", 40)
    np.testing.assert_allclose(img, reconstruct(Sinogram(est.grid_, sino), cfg).values, atol=1e-13)
    assert est.filter(sino).shape == (2 * est.half_count_ + 1, est.grid_.N)


def test_estimator_stacks_and_score():
    est = FBPReconstructor(k=4, side=16)
    X = np.stack([est.fit().simulate(unit_disk()), est.simulate(smooth_phantom(1))])
    out = est.fit_transform(X)
    assert out.shape == (2, 16, 16)
    np.testing.assert_allclose(out[1], est.transform(X[1]))
    refs = np.stack([unit_disk().render(16), smooth_phantom(1).render(16)])
    assert est.score(X, refs) < 0
    assert est.score(X[0], refs[0]) == pytest.approx(-approximation_error(unit_disk(), est.config_, 2))


def test_estimator_windows_and_bad_input():
    for window, kw in (("ram-lak", {}), ("shepp-logan", {}), ("cosine", {}), ("hamming", {"beta": 0.6})):
        est = FBPReconstructor(k=3, window=window, side=8, **kw).fit()
        assert est.filter_.window.kind == window
    assert FBPReconstructor(k=3, window="hamming").fit().filter_.window.beta == 0.54
    est = FBPReconstructor(k=3, side=8).fit()
    with pytest.raises(ValueError):
        est.transform(np.zeros((5, 5)))
    with pytest.raises(ValueError):
        FBPReconstructor(k=3).fit(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        FBPReconstructor(k=0).fit()


def test_estimator_without_extension_uses_lattice():
    est = FBPReconstructor(k=4, side=8, extend=False).fit()
    assert est.half_count_ == 4
    assert est.filter(np.zeros(est.grid_.shape)).shape == est.grid_.shape
