"""Discrete filtered back projection.

    f_FBP = 1/2 B_D( I[ F^-1 A_L *_D Rf ] )

with the trapezoidal discrete convolution ``*_D``, an interpolation ``I`` in
the detector variable and the discrete back projection ``B_D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bandwidth_multiple, check_sinogram_array
from .filters import Filter, Window, inv_fourier_filter
from .transforms import (
    INTERPOLATIONS,
    Image,
    Sinogram,
    SinogramGrid,
    back_project,
    discrete_lp_norm,
    sample_sinogram,
)

__all__ = [
    "ReconstructionConfig",
    "FilteredSinogram",
    "FBPReconstructor",
    "filter_taps",
    "filter_sinogram",
    "extended_half_count",
    "reconstruct",
    "approximation_error",
    "approximation_errors",
]


@dataclass(frozen=True)
class ReconstructionConfig:
    """Bandwidth L = k pi, window, interpolation and output resolution."""

    k: int
    window: Window = field(default_factory=lambda: Window.smooth(5))
    interp: str = "linear"
    side: int = 256
    extend: bool = True

    def __post_init__(self):
        check_bandwidth_multiple(self.k)
        if self.interp not in INTERPOLATIONS:
            raise ValueError(f"interp must be one of {INTERPOLATIONS}, got {self.interp!r}")
        if self.side < 1:
            raise ValueError("side must be >= 1")

    @property
    def L(self) -> float:
        return self.k * math.pi

    @property
    def grid(self) -> SinogramGrid:
        return SinogramGrid.from_k(self.k)

    @property
    def filter(self) -> Filter:
        return Filter(self.window, self.L)


@dataclass(frozen=True, eq=False)
class FilteredSinogram:
    """Filtered projections at t = m d for |m| <= half_count."""

    grid: SinogramGrid
    values: np.ndarray
    half_count: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(-self.half_count, self.half_count + 1) * self.grid.d


def extended_half_count(grid: SinogramGrid) -> int:
    """Smallest index range whose samples cover |t| <= sqrt(2), the pixel square."""
    return int(math.ceil(math.sqrt(2.0) * grid.M - 1e-9)) + 1


def filter_taps(filt: Filter, grid: SinogramGrid, half_count: int | None = None) -> np.ndarray:
    """Samples F^-1 A_L(j d) for j = -(M + H)..(M + H), H = half_count (default M)."""
    H = grid.M if half_count is None else half_count
    j = np.arange(-(grid.M + H), grid.M + H + 1)
    return inv_fourier_filter(filt, j * grid.d)


def _toeplitz(taps: np.ndarray, M: int, H: int | None = None) -> np.ndarray:
    H = M if H is None else H
    m_out = np.arange(-H, H + 1)
    m_in = np.arange(-M, M + 1)
    return taps[(m_out[:, None] - m_in[None, :]) + M + H]


def filter_sinogram(sino: Sinogram, filt: Filter, taps=None, extend: bool = False) -> FilteredSinogram:
    """out[m, n] = d * sum_{m'} F^-1 A_L((m - m') d) * sino[m', n].

    Every sample carries the full weight d: the data vanish beyond the
    sampled t-range, so the trapezoidal end corrections are zero.  The
    output lives on the input lattice |m| <= M, or with ``extend`` on
    |m| <= ceil(sqrt(2) M) + 1 so that back projection onto the corners of
    [-1, 1]^2 sees the filtered data instead of zeros.
    """
    grid = sino.grid
    H = extended_half_count(grid) if extend else grid.M
    if taps is None:
        taps = filter_taps(filt, grid, H)
    if len(taps) != 2 * (grid.M + H) + 1:
        raise ValueError(f"expected {2 * (grid.M + H) + 1} filter taps, got {len(taps)}")
    out = grid.d * (_toeplitz(taps, grid.M, H) @ sino.values)
    return FilteredSinogram(grid, out, H)


def reconstruct(sino: Sinogram, config: ReconstructionConfig, n_jobs=None) -> Image:
    if sino.grid != config.grid:
        raise ValueError(f"sinogram grid {sino.grid} does not match config k={config.k}")
    filtered = filter_sinogram(sino, config.filter, extend=config.extend)
    img = back_project(filtered.values, sino.grid, config.side, config.interp,
                       n_jobs=n_jobs, half_count=filtered.half_count)
    return Image(0.5 * img.values)


def approximation_errors(phantom, config: ReconstructionConfig, ps, n_jobs=None) -> dict:
    """Discrete L^p norms of render(phantom) - f_FBP for several p, one reconstruction."""
    sino = sample_sinogram(phantom, config.grid)
    diff = phantom.render(config.side) - reconstruct(sino, config, n_jobs=n_jobs).values
    return {p: discrete_lp_norm(diff, p) for p in ps}


def approximation_error(phantom, config: ReconstructionConfig, p) -> float:
    return approximation_errors(phantom, config, [p])[p]


class FBPReconstructor(TransformerMixin, BaseEstimator):
    """Filtered back projection as a scikit-learn transformer.

    ``fit`` derives the sampling grid for L = k*pi and tabulates the filter;
    ``transform`` maps a sinogram of shape (2M+1, N), or a stack of them with
    shape (n, 2M+1, N), to images of shape (side, side).

    Parameters
    ----------
    k : int
        Bandwidth multiple, L = k * pi.
    window : str
        One of ``filters.WINDOW_KINDS``.
    nu : int
        Order of the smooth window.
    beta : float, optional
        Hamming parameter in [1/2, 1].
    interp : {'linear', 'cubic'}
    side : int
        Pixels per axis of the output on [-1, 1]^2.
    extend : bool
        Evaluate the filtered projections beyond |t| = 1 so that the corners
        of the square are reconstructed from the convolution instead of
        being cut off.
    n_jobs : int, optional
        Threads used for back projection; results do not depend on it.
    """

    def __init__(self, k=16, window="smooth", nu=5, beta=None, interp="linear", side=256,
                 extend=True, n_jobs=None):
        self.k = k
        self.window = window
        self.nu = nu
        self.beta = beta
        self.interp = interp
        self.side = side
        self.extend = extend
        self.n_jobs = n_jobs

    def _window(self):
        if self.window == "smooth":
            return Window("smooth", nu=self.nu)
        if self.window == "hamming":
            return Window("hamming", beta=0.54 if self.beta is None else self.beta)
        return Window(self.window)

    def fit(self, X=None, y=None):
        self.config_ = ReconstructionConfig(self.k, self._window(), self.interp, self.side, bool(self.extend))
        self.grid_ = self.config_.grid
        self.filter_ = self.config_.filter
        self.half_count_ = extended_half_count(self.grid_) if self.extend else self.grid_.M
        self.taps_ = filter_taps(self.filter_, self.grid_, self.half_count_)
        if X is not None:
            check_sinogram_array(X, self.grid_)
        return self

    def filter(self, X):
        """Apply only the discrete convolution step.

        Returns arrays with 2 * half_count_ + 1 detector rows.
        """
        check_is_fitted(self, "taps_")
        X, single = check_sinogram_array(X, self.grid_)
        T = _toeplitz(self.taps_, self.grid_.M, self.half_count_)
        out = self.grid_.d * np.einsum("ij,bjn->bin", T, X)
        return out[0] if single else out

    def transform(self, X):
        check_is_fitted(self, "taps_")
        filtered = self.filter(X)
        single = filtered.ndim == 2
        stack = filtered[None] if single else filtered
        images = [
            0.5 * back_project(h, self.grid_, self.side, self.interp, n_jobs=self.n_jobs,
                               half_count=self.half_count_).values
            for h in stack
        ]
        out = np.stack(images)
        return out[0] if single else out

    def simulate(self, phantom) -> np.ndarray:
        """Analytic sinogram of ``phantom`` on the fitted grid."""
        check_is_fitted(self, "grid_")
        return sample_sinogram(phantom, self.grid_).values

    def score(self, X, y):
        """Negative discrete L^2 error between transform(X) and reference images y."""
        pred = self.transform(X)
        y = np.asarray(y, dtype=float)
        if pred.ndim == 2:
            return -discrete_lp_norm(pred - y, 2)
        return -float(np.mean([discrete_lp_norm(a - b, 2) for a, b in zip(pred, y)]))
