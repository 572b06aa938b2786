"""Parallel-beam sampling of the Radon transform and discrete back projection."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "INTERPOLATIONS",
    "SinogramGrid",
    "Sinogram",
    "Image",
    "pixel_centers",
    "sample_sinogram",
    "back_project",
    "discrete_lp_norm",
    "sinogram_lp_norm",
    "DIAM_SQUARE",
]

INTERPOLATIONS = ("linear", "cubic")
DIAM_SQUARE = 2.0 * math.sqrt(2.0)  # diam([-1, 1]^2)


@dataclass(frozen=True)
class SinogramGrid:
    """Lattice {(m d, n pi / N) : -M <= m <= M, 0 <= n < N} coupled to bandwidth L.

    The coupling is d = pi / L, M = round(1 / d), N = ceil(pi M).
    """

    d: float
    M: int
    N: int
    L: float

    def __post_init__(self):
        if not (self.d > 0 and self.M >= 1 and self.N >= 1 and self.L > 0):
            raise ValueError(f"invalid sinogram grid {self}")
        if not math.isclose(self.d, math.pi / self.L, rel_tol=1e-12):
            raise ValueError(f"d must equal pi / L, got d={self.d}, L={self.L}")
        if self.M != round(1 / self.d) or self.N != math.ceil(math.pi * self.M - 1e-9):
            raise ValueError(f"M, N do not follow the coupling for d={self.d}: M={self.M}, N={self.N}")

    @classmethod
    def from_bandwidth(cls, L: float) -> "SinogramGrid":
        d = math.pi / L
        M = max(1, round(1 / d))
        return cls(d=d, M=M, N=math.ceil(math.pi * M - 1e-9), L=float(L))

    @classmethod
    def from_k(cls, k: int) -> "SinogramGrid":
        """Grid for L = k pi (then d = 1/k and M = k)."""
        if int(k) != k or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        return cls.from_bandwidth(k * math.pi)

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.M + 1, self.N)

    @property
    def t(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1) * self.d

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.N) * (math.pi / self.N)

    @property
    def cell(self) -> float:
        """Measure d * pi / N of one lattice cell."""
        return self.d * math.pi / self.N


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Samples ``values[m + M, n] ~ Rf(m d, n pi / N)``."""

    grid: SinogramGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"sinogram shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sinogram contains non-finite values")
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "Sinogram":
        return Sinogram(self.grid, values)


def pixel_centers(side: int) -> np.ndarray:
    """x_i = -1 + (i + 1/2) * 2 / side."""
    if side < 1:
        raise ValueError("side must be >= 1")
    return -1.0 + (np.arange(side) + 0.5) * (2.0 / side)


@dataclass(frozen=True, eq=False)
class Image:
    """side x side pixel values on [-1, 1]^2 (rows follow y, columns follow x)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"image must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def side(self) -> int:
        return self.values.shape[0]

    @property
    def pixel_area(self) -> float:
        return (2.0 / self.side) ** 2

    def __sub__(self, other):
        return Image(self.values - np.asarray(getattr(other, "values", other)))

    def lp_norm(self, p) -> float:
        return discrete_lp_norm(self, p)


def sample_sinogram(phantom, grid: SinogramGrid) -> Sinogram:
    """Exact analytic Radon samples of ``phantom`` on ``grid``."""
    T, TH = np.meshgrid(grid.t, grid.theta, indexing="ij")
    return Sinogram(grid, phantom.radon_analytic(T, TH))


def _check_p(p) -> float:
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return p


def _lp(values: np.ndarray, p: float, weight: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**p) * weight) ** (1.0 / p))


def discrete_lp_norm(img, p) -> float:
    """(sum |v|^p dx dy)^(1/p) with dx = dy = 2 / side; max |v| for p = inf."""
    p = _check_p(p)
    values = np.asarray(getattr(img, "values", img), dtype=float)
    side = values.shape[0]
    return _lp(values, p, (2.0 / side) ** 2)


def sinogram_lp_norm(sino: Sinogram, p) -> float:
    """Midpoint Riemann sum for the L^p(R x [0, pi)) norm, cell measure d * pi / N."""
    p = _check_p(p)
    return _lp(sino.values, p, sino.grid.cell)


def _resolve_jobs(n_jobs):
    if n_jobs is None:
        n_jobs = int(os.environ.get("BESOVFBP_NUM_THREADS", "1"))
    if n_jobs == -1:
        n_jobs = os.cpu_count() or 1
    return max(1, int(n_jobs))


def back_project(values, grid: SinogramGrid, side: int, interp: str = "linear", n_jobs=None,
                 half_count: int | None = None) -> Image:
    """Discrete back projection (1/N) sum_n h(x cos th_n + y sin th_n, th_n).

    ``h`` is interpolated in t from samples at m d (linear or natural cubic
    spline) and set to 0 outside the sampled range.  The samples are the
    lattice itself (|m| <= M) unless ``half_count`` widens them to
    |m| <= half_count.  The rectangle rule over [0, pi) coincides with the
    composite trapezoidal rule because the integrand is pi-periodic in
    theta.  The per-pixel summation order is fixed, so the result does not
    depend on ``n_jobs``.
    """
    values = np.asarray(getattr(values, "values", values), dtype=float)
    M = grid.M if half_count is None else int(half_count)
    if values.shape != (2 * M + 1, grid.N):
        raise ValueError(f"array shape {values.shape} does not match {(2 * M + 1, grid.N)}")
    if interp not in INTERPOLATIONS:
        raise ValueError(f"interp must be one of {INTERPOLATIONS}, got {interp!r}")
    c = pixel_centers(side)
    X, Y = np.meshgrid(c, c)
    x, y = X.ravel(), Y.ravel()
    coeffs = None
    if interp == "cubic":
        t = np.arange(-M, M + 1) * grid.d
        coeffs = CubicSpline(t, values, axis=0, bc_type="natural").c
    n_jobs = _resolve_jobs(n_jobs)
    chunks = np.array_split(np.arange(x.size), n_jobs)
    work = lambda idx: _back_project_points(values, coeffs, M, grid.d, grid.theta, x[idx], y[idx])
    if n_jobs == 1:
        out = work(chunks[0])
    else:
        with ThreadPoolExecutor(n_jobs) as pool:
            out = np.concatenate(list(pool.map(work, chunks)))
    return Image(out.reshape(side, side))


def _back_project_points(values, coeffs, M, d, thetas, x, y):
    tmax = M * d
    acc = np.zeros(x.size)
    for n, th in enumerate(thetas):
        t = x * math.cos(th) + y * math.sin(th)
        u = (t + tmax) / d
        inside = (u >= 0) & (u <= 2 * M)
        i = np.clip(np.floor(u).astype(np.intp), 0, 2 * M - 1)
        if coeffs is None:
            frac = u - i
            col = values[:, n]
            h = (1 - frac) * col[i] + frac * col[i + 1]
        else:
            s = t - (i * d - tmax)
            c = coeffs[:, :, n]
            h = ((c[0, i] * s + c[1, i]) * s + c[2, i]) * s + c[3, i]
        acc += np.where(inside, h, 0.0)
    return acc / len(thetas)
