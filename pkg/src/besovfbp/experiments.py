"""Noise injection, error sweeps over the bandwidth, log-log slope fits and
the a-priori bandwidth rule."""

from __future__ import annotations

import math
import time
from functools import lru_cache
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .fbp import ReconstructionConfig, reconstruct
from .filters import Filter, Window, l1_norm_inv_fourier
from .transforms import DIAM_SQUARE, Sinogram, discrete_lp_norm, sample_sinogram, sinogram_lp_norm

__all__ = [
    "REPORTED_PS",
    "NoiseSpec",
    "ExperimentRecord",
    "SlopeFit",
    "SweepResult",
    "noise_generator",
    "add_noise",
    "fit_loglog_slope",
    "geometric_k_range",
    "default_interp",
    "sweep_approximation",
    "sweep_data_error",
    "sweep_total_error",
    "data_error_bound",
    "apriori_bandwidth",
    "bandwidth_multiple",
    "corollary_run",
]

REPORTED_PS = (1.0, 4.0 / 3.0, 2.0, 4.0, math.inf)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise.

    With ``relative`` the standard deviation is ``level * m_Rf``, where m_Rf
    is the mean absolute sinogram value; otherwise it is ``level`` itself.
    """

    level: float = 0.1
    seed: int = 0
    relative: bool = True

    def __post_init__(self):
        if not (self.level >= 0 and math.isfinite(self.level)):
            raise ValueError(f"noise level must be finite and >= 0, got {self.level}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")

    def std(self, sino: Sinogram) -> float:
        if not self.relative:
            return float(self.level)
        return float(self.level * np.mean(np.abs(sino.values)))


def noise_generator(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 stream keyed by (seed, *stream); normals use numpy's ziggurat."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


def add_noise(sino: Sinogram, spec: NoiseSpec, stream=()):
    """Return (noisy sinogram, realized discrete norms ||noise||_p for p in REPORTED_PS).

    ``stream`` selects an independent substream (e.g. sweep point and trial),
    so results never depend on evaluation order.
    """
    std = spec.std(sino)
    if std == 0:
        return sino.with_values(sino.values.copy()), {p: 0.0 for p in REPORTED_PS}
    eps = std * noise_generator(spec.seed, *stream).standard_normal(sino.values.shape)
    noise = sino.with_values(eps)
    realized = {p: sinogram_lp_norm(noise, p) for p in REPORTED_PS}
    return sino.with_values(sino.values + eps), realized


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def fit_loglog_slope(points) -> SlopeFit:
    """Least squares line through (ln x, ln y); residual is the RMS misfit in ln y."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (x, y) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("all coordinates must be positive and finite")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise ValueError("degenerate design: all x values coincide")
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ np.array([slope, intercept])
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def geometric_k_range(kmin: int, kmax: int) -> list[int]:
    """The values 2^j and 3 * 2^(j-1) in [kmin, kmax] (8..64 gives 8,12,16,24,32,48,64)."""
    if not 1 <= kmin <= kmax:
        raise ValueError("need 1 <= kmin <= kmax")
    ks = set()
    j = 0
    while 2**j <= kmax:
        ks.update(v for v in (2**j, 3 * 2**j // 2) if kmin <= v <= kmax and v >= 1)
        j += 1
    return sorted(ks)


def default_interp(phantom) -> str:
    """Linear interpolation for discontinuous phantoms, cubic splines otherwise."""
    return "linear" if phantom.min_sigma < 1 else "cubic"


@dataclass
class ExperimentRecord:
    kind: str
    phantom: str
    nu: int
    p: float
    k: int
    error: float
    trials: int = 1
    seed: int | None = None
    wall_ms: float | None = None
    std: float = 0.0
    bound: float | None = None
    bound_ok: bool | None = None

    @property
    def L(self) -> float:
        return self.k * math.pi


@dataclass
class SweepResult:
    records: list[ExperimentRecord]
    slopes: dict = field(default_factory=dict)  # (kind, nu, p) -> SlopeFit or None
    fit_from: int | None = None

    def series(self, kind, nu, p):
        rows = [r for r in self.records if r.kind == kind and r.nu == nu and r.p == p]
        return sorted(rows, key=lambda r: r.k)

    def fit(self, fit_from=None):
        """(Re)fit one slope per (kind, nu, p) on k >= fit_from; None where undefined."""
        self.fit_from = fit_from
        self.slopes = {}
        for key in sorted({(r.kind, r.nu, r.p) for r in self.records}, key=str):
            rows = [r for r in self.series(*key) if fit_from is None or r.k >= fit_from]
            pts = [(r.L, r.error) for r in rows]
            if len(pts) >= 3 and all(e > 0 for _, e in pts):
                self.slopes[key] = fit_loglog_slope(pts)
            else:
                # e.g. noiseless data error: every error is 0 and log fails
                self.slopes[key] = None
        return self


def _check_sweep(k_range, p_list, nu_list):
    ks = sorted({int(k) for k in k_range})
    if len(ks) < 5:
        raise ValueError(f"a sweep needs at least 5 distinct k values, got {ks}")
    if not p_list or not nu_list:
        raise ValueError("p_list and nu_list must be non-empty")
    return ks


def _elapsed_ms(t0, timing):
    return round((time.perf_counter() - t0) * 1e3, 3) if timing else None


def sweep_approximation(phantom, p_list, nu_list, k_range, interp=None, side=512, fit_from=None,
                        n_jobs=None, timing=False) -> SweepResult:
    """Noiseless discrete L^p errors ||f - f_FBP|| over k, one reconstruction per (k, nu)."""
    ks = _check_sweep(k_range, p_list, nu_list)
    interp = interp or default_interp(phantom)
    reference = phantom.render(side)
    records = []
    for nu in nu_list:
        for k in ks:
            t0 = time.perf_counter()
            cfg = ReconstructionConfig(k, Window.smooth(nu), interp, side)
            diff = reference - reconstruct(sample_sinogram(phantom, cfg.grid), cfg, n_jobs=n_jobs).values
            wall = _elapsed_ms(t0, timing)
            for p in p_list:
                records.append(ExperimentRecord("approx", phantom.name, nu, float(p), k,
                                                discrete_lp_norm(diff, p), wall_ms=wall))
    return SweepResult(records).fit(fit_from)


@lru_cache(maxsize=None)
def _unit_l1_norm(nu: int) -> float:
    # ||F^-1 A_L||_L1 = L ||F^-1 A||_L1 by the scaling F^-1 A_L(s) = L^2 F^-1 A(L s)
    return l1_norm_inv_fourier(Filter(Window.smooth(nu), 1.0))


def data_error_bound(nu, k, p, realized_delta) -> float:
    """(1 / (2 pi^(1/p))) diam^(1/p) ||F^-1 A_L||_L1 delta_p with diam = 2 sqrt 2."""
    p = float(p)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    l1 = k * math.pi * _unit_l1_norm(int(nu))
    return 0.5 * math.pi ** (-inv_p) * DIAM_SQUARE**inv_p * l1 * realized_delta


def sweep_data_error(phantom, p_list, nu_list, k_range, spec: NoiseSpec, trials=5, interp=None, side=512,
                     fit_from=None, n_jobs=None, timing=False) -> SweepResult:
    """Mean over trials of ||f_FBP - f_FBP^delta||_p, with the data-error bound per trial.

    The reconstruction is linear in the data, so each trial reconstructs the
    noise alone.  Trial ``i`` at bandwidth multiple ``k`` draws from stream
    (k, i), hence the same noise for every nu.
    """
    ks = _check_sweep(k_range, p_list, nu_list)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    interp = interp or default_interp(phantom)
    records = []
    for nu in nu_list:
        for k in ks:
            t0 = time.perf_counter()
            cfg = ReconstructionConfig(k, Window.smooth(nu), interp, side)
            sino = sample_sinogram(phantom, cfg.grid)
            errs = {p: [] for p in p_list}
            ok = {p: True for p in p_list}
            bounds = {p: 0.0 for p in p_list}
            for trial in range(trials):
                noisy, realized = add_noise(sino, spec, stream=(k, trial))
                noise = noisy.with_values(noisy.values - sino.values)
                img = reconstruct(noise, cfg, n_jobs=n_jobs).values
                for p in p_list:
                    e = discrete_lp_norm(img, p)
                    errs[p].append(e)
                    delta_p = realized.get(float(p), None)
                    if delta_p is None:
                        delta_p = sinogram_lp_norm(noise, p)
                    b = data_error_bound(nu, k, p, delta_p)
                    bounds[p] = max(bounds[p], b)
                    ok[p] = ok[p] and e <= 1.1 * b
            wall = _elapsed_ms(t0, timing)
            for p in p_list:
                records.append(ExperimentRecord(
                    "data", phantom.name, nu, float(p), k, float(np.mean(errs[p])), trials, spec.seed, wall,
                    std=float(np.std(errs[p])), bound=bounds[p], bound_ok=ok[p],
                ))
    return SweepResult(records).fit(fit_from)


def sweep_total_error(phantom, p_list, nu_list, k_range, spec: NoiseSpec, trials=5, interp=None, side=512,
                      fit_from=None, n_jobs=None, timing=False) -> SweepResult:
    """Mean over trials of ||f - f_FBP^delta||_p, using the same noise streams as the data sweep."""
    ks = _check_sweep(k_range, p_list, nu_list)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    interp = interp or default_interp(phantom)
    reference = phantom.render(side)
    records = []
    for nu in nu_list:
        for k in ks:
            t0 = time.perf_counter()
            cfg = ReconstructionConfig(k, Window.smooth(nu), interp, side)
            sino = sample_sinogram(phantom, cfg.grid)
            errs = {p: [] for p in p_list}
            for trial in range(trials):
                noisy, _ = add_noise(sino, spec, stream=(k, trial))
                diff = reference - reconstruct(noisy, cfg, n_jobs=n_jobs).values
                for p in p_list:
                    errs[p].append(discrete_lp_norm(diff, p))
            wall = _elapsed_ms(t0, timing)
            for p in p_list:
                records.append(ExperimentRecord("total", phantom.name, nu, float(p), k, float(np.mean(errs[p])),
                                                trials, spec.seed, wall, std=float(np.std(errs[p]))))
    return SweepResult(records).fit(fit_from)


def bandwidth_multiple(L: float) -> int:
    """Nearest k >= 1 with L close to k pi."""
    return max(1, int(round(L / math.pi)))


def apriori_bandwidth(delta: float, alpha: float, seminorm: float) -> float:
    """L = delta^(-1/(alpha+1)) |f|^(1/(alpha+1)), rounded to the nearest admissible k pi, k >= 1."""
    if not (delta > 0 and alpha > 0 and seminorm > 0):
        raise ValueError("delta, alpha and seminorm must all be positive")
    raw = (seminorm / delta) ** (1.0 / (alpha + 1.0))
    return bandwidth_multiple(raw) * math.pi


@dataclass
class CorollaryResult:
    deltas: list
    ks: list
    errors: list
    fit: SlopeFit
    seminorm: float


def corollary_run(phantom, alpha, seminorm, p=2.0, delta0=0.01, halvings=6, nu=5, trials=3, seed=0,
                  interp=None, side=512, n_jobs=None) -> CorollaryResult:
    """Total error with the a-priori bandwidth over delta = delta0 2^-i, i < halvings.

    Noise has standard deviation delta (absolute); the fit is of the error
    against delta, to be compared with alpha / (alpha + 1).
    """
    if halvings < 3:
        raise ValueError("need at least 3 noise levels")
    interp = interp or default_interp(phantom)
    reference = phantom.render(side)
    deltas, ks, errors = [], [], []
    for i in range(halvings):
        delta = delta0 * 2.0**-i
        L = apriori_bandwidth(delta, alpha, seminorm)
        k = bandwidth_multiple(L)
        cfg = ReconstructionConfig(k, Window.smooth(nu), interp, side)
        sino = sample_sinogram(phantom, cfg.grid)
        spec = NoiseSpec(delta, seed, relative=False)
        errs = []
        for trial in range(trials):
            noisy, _ = add_noise(sino, spec, stream=(i, trial))
            errs.append(discrete_lp_norm(reference - reconstruct(noisy, cfg, n_jobs=n_jobs).values, p))
        deltas.append(delta)
        ks.append(k)
        errors.append(float(np.mean(errs)))
    fit = fit_loglog_slope(zip(deltas, errors))
    return CorollaryResult(deltas, ks, errors, fit, float(seminorm))
