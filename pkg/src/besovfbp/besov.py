"""Moduli of continuity, Besov semi-norm estimates and the one-dimensional
inequalities behind the error bounds.

The modulus ``omega_p(f, delta)`` is estimated as the maximum over
``n_dir`` equispaced shift directions at radius ``delta``.  Each shifted
difference is integrated with the midpoint rule on a square grid centred
between the two supports, and shifted values come from evaluating ``f``
analytically, so no image resampling enters.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .transforms import _resolve_jobs

__all__ = [
    "ModulusCurve",
    "BesovEstimate",
    "TabulatedIncreasing",
    "modulus_of_continuity",
    "modulus_curve",
    "besov_seminorm",
    "difference_seminorm",
    "constant_c_alpha_q",
    "verify_lemma_embedding_p",
    "verify_lemma_embedding_inf",
    "verify_lemma_limit",
]

DEFAULT_DIRECTIONS = 16
DEFAULT_SIDE = 512
_SUPPORT_RADIUS = 1.0  # phantoms live in the closed unit disk


@dataclass(frozen=True)
class ModulusCurve:
    deltas: np.ndarray
    values: np.ndarray
    p: float


@dataclass(frozen=True)
class BesovEstimate:
    """Semi-norm estimate with the grids it was computed on."""

    alpha: float
    p: float
    q: float
    value: float
    method: dict = field(default_factory=dict)


def _lp_sum(values, p, weight):
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**p) * weight) ** (1.0 / p))


def _as_function(f) -> Callable:
    if hasattr(f, "evaluate"):
        return f.evaluate
    if callable(f):
        return f
    return None


def _image_shift_norm(values, p, shift):
    from scipy import ndimage

    side = values.shape[0]
    h = 2.0 / side
    # rows follow y, columns follow x
    moved = ndimage.shift(values, (shift[1] / h, shift[0] / h), order=1, mode="constant", cval=0.0)
    return _lp_sum(moved - values, p, h * h)


def _function_norm(func, p, side):
    c = -1.0 + (np.arange(side) + 0.5) * (2.0 / side)
    X, Y = np.meshgrid(c, c)
    return _lp_sum(func(X, Y), p, (2.0 / side) ** 2)


def _shift_norm(func, p, shift, side):
    """||f(. - s) - f||_p on the square centred at s/2 that holds both supports."""
    sx, sy = shift
    half = _SUPPORT_RADIUS + 0.5 * math.hypot(sx, sy)
    h = 2.0 * half / side
    c = -half + (np.arange(side) + 0.5) * h
    X, Y = np.meshgrid(c, c)
    # centring the grid at s/2 turns the pair into f(x - s/2) - f(x + s/2)
    diff = func(X - 0.5 * sx, Y - 0.5 * sy) - func(X + 0.5 * sx, Y + 0.5 * sy)
    return _lp_sum(diff, p, h * h)


def _directions(n_dir):
    """Unit vectors at angles 2 pi i / n_dir, keeping one of each +-s pair.

    ||f(. - s) - f||_p = ||f(. + s) - f||_p, so opposite shifts are redundant.
    """
    if n_dir < 1:
        raise ValueError("n_dir must be >= 1")
    phi = np.arange(n_dir) * (2.0 * math.pi / n_dir)
    if n_dir % 2 == 0:
        phi = phi[: n_dir // 2]
    return np.column_stack([np.cos(phi), np.sin(phi)])


def modulus_of_continuity(f, p, delta: float, n_dir: int = DEFAULT_DIRECTIONS, side: int = DEFAULT_SIDE,
                          n_jobs=None) -> float:
    """Estimate omega_p(f, delta) = sup_{|s| <= delta} ||f(. - s) - f||_p.

    Parameters
    ----------
    f : Phantom, callable (x, y) -> values, or a square array
        Callables must vanish outside the unit disk.  Arrays are read as
        images on [-1, 1]^2 and shifted by linear resampling; whatever is
        shifted past the frame is lost, so images should vanish in a border
        band at least delta wide.
    p : float
        Exponent in [1, inf].
    delta : float
        Shift radius, > 0.
    n_dir : int
        Number of equispaced directions sampled on the circle of radius delta.
    side : int
        Pixels per axis of the integration grid (at least 512 is advised).
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta!r}")
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return float(modulus_curve(f, p, [delta], n_dir=n_dir, side=side, n_jobs=n_jobs,
                               cumulative=False).values[0])


def modulus_curve(f, p, deltas, n_dir: int = DEFAULT_DIRECTIONS, side: int = DEFAULT_SIDE, n_jobs=None,
                  cumulative: bool = True) -> ModulusCurve:
    """omega_p(f, .) on an increasing grid of radii.

    With ``cumulative`` the circle maxima are replaced by their running
    maximum, which is the sup over the disk restricted to the sampled radii
    and keeps the curve non-decreasing.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or np.any(deltas <= 0) or np.any(np.diff(deltas) <= 0):
        raise ValueError("deltas must be positive and strictly increasing")
    p = float(p)
    func = _as_function(f)
    image = None if func is not None else np.asarray(getattr(f, "values", f), dtype=float)
    dirs = _directions(n_dir)

    if func is not None:
        norm_f = _function_norm(func, p, side)
        far = norm_f if math.isinf(p) else 2.0 ** (1.0 / p) * norm_f

    def at_radius(delta):
        if func is None:
            return max(_image_shift_norm(image, p, delta * u) for u in dirs)
        if delta >= 2.0 * _SUPPORT_RADIUS:
            # disjoint supports: the norm of the difference is known exactly
            return far
        return max(_shift_norm(func, p, delta * u, side) for u in dirs)

    n_jobs = _resolve_jobs(n_jobs)
    if n_jobs == 1:
        vals = [at_radius(d) for d in deltas]
    else:
        with ThreadPoolExecutor(n_jobs) as pool:
            vals = list(pool.map(at_radius, deltas))
    vals = np.asarray(vals)
    if cumulative:
        vals = np.maximum.accumulate(vals)
    return ModulusCurve(deltas, vals, p)


def constant_c_alpha_q(alpha: float, q) -> float:
    """(2 e alpha q)^(1/q) for finite q, 1 for q = inf."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    q = float(q)
    if math.isinf(q):
        return 1.0
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return (2.0 * math.e * alpha * q) ** (1.0 / q)


def _integrate_curve(t, omega, alpha, q, tail_norm):
    """Log-grid quadrature of (t^-alpha omega)^q dt/t plus the constant-bound tail."""
    w = t ** (-alpha) * omega
    if math.isinf(q):
        tail = 2.0 * tail_norm * t[-1] ** (-alpha)
        return float(max(w.max(), tail)), {"tail": tail, "head": 0.0}
    body = integrate.trapezoid(w**q, np.log(t))
    tail = (2.0 * tail_norm) ** q * t[-1] ** (-alpha * q) / (alpha * q)
    # omega(t) ~ omega(t_min) t / t_min below the grid, integrated exactly
    head = w[0] ** q / (q * (1.0 - alpha)) if alpha < 1 else math.inf
    return float((body + tail) ** (1.0 / q)), {"tail": tail ** (1.0 / q), "head": head ** (1.0 / q)}


def difference_seminorm(f, alpha, p, q, t_min=1e-4, t_max=8.0, n_t=64, n_dir=DEFAULT_DIRECTIONS,
                        side=DEFAULT_SIDE, n_jobs=None) -> BesovEstimate:
    """Integrate t^-alpha omega_p(f, t) with first differences for any alpha > 0.

    For alpha in (0, 1) this is the Besov semi-norm of ``f``.  For larger
    alpha it only measures how fast the first-difference integrand blows up,
    which is finite only for f = 0; use :func:`besov_seminorm` there.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    p, q = float(p), float(q)
    if not (p >= 1 and q >= 1):
        raise ValueError("p and q must lie in [1, inf]")
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    t = np.geomspace(t_min, t_max, n_t)
    curve = modulus_curve(f, p, t, n_dir=n_dir, side=side, n_jobs=n_jobs)
    func = _as_function(f)
    norm_f = _function_norm(func, p, side) if func is not None else _lp_sum(
        np.asarray(getattr(f, "values", f)), p, (2.0 / np.asarray(getattr(f, "values", f)).shape[0]) ** 2)
    value, parts = _integrate_curve(t, curve.values, alpha, q, norm_f)
    meta = {"t_min": t_min, "t_max": t_max, "n_t": n_t, "n_dir": n_dir, "side": side,
            "tail": parts["tail"], "head_estimate": parts["head"]}
    return BesovEstimate(float(alpha), p, q, value, meta)


def besov_seminorm(f, alpha, p, q, t_min=1e-4, t_max=8.0, n_t=64, n_dir=DEFAULT_DIRECTIONS,
                   side=DEFAULT_SIDE, n_jobs=None) -> BesovEstimate:
    """Estimate |f|_{B^{alpha,p}_q} for non-integer alpha = n + theta.

    For n >= 1 the estimate is sum_{|j| = n} n!/(j1! j2!) |d^j f|_{B^{theta,p}_q}
    with analytic partial derivatives of the phantom.

    Notes
    -----
    The integral over [t_min, t_max] uses the trapezoidal rule in log t; the
    part beyond t_max uses omega <= 2 ||f||_p and is added in closed form.
    The part below t_min is not included; its linear-modulus estimate is
    returned as ``method["head_estimate"]``.
    """
    alpha = float(alpha)
    if not alpha > 0 or float(alpha).is_integer():
        raise ValueError(f"alpha must be positive and non-integer, got {alpha}")
    n = int(math.floor(alpha))
    theta = alpha - n
    common = dict(t_min=t_min, t_max=t_max, n_t=n_t, n_dir=n_dir, side=side, n_jobs=n_jobs)
    if n == 0:
        est = difference_seminorm(f, alpha, p, q, **common)
        return BesovEstimate(alpha, est.p, est.q, est.value, {**est.method, "n": 0})
    if not hasattr(f, "partial_derivative"):
        raise ValueError(f"alpha = {alpha} > 1 needs analytic derivatives of order {n}")
    if getattr(f, "min_sigma", math.inf) < n:
        raise ValueError(
            f"alpha = {alpha} needs derivatives of order {n}, but the phantom has profile order "
            f"{f.min_sigma}"
        )
    total = 0.0
    parts = {}
    for j1 in range(n, -1, -1):
        j2 = n - j1
        weight = math.factorial(n) // (math.factorial(j1) * math.factorial(j2))
        deriv = lambda x, y, a=j1, b=j2: f.partial_derivative(a, b, x, y)
        est = difference_seminorm(deriv, theta, p, q, **common)
        parts[f"{j1},{j2}"] = est.value
        total += weight * est.value
    meta = {**common, "n": n, "theta": theta, "derivative_terms": parts}
    meta.pop("n_jobs")
    return BesovEstimate(alpha, float(p), float(q), total, meta)


# ---------------------------------------------------------------------------
# one-dimensional inequalities for increasing functions


@dataclass(frozen=True)
class TabulatedIncreasing:
    """Right-continuous increasing step function.

    ``g(t) = values[i]`` on [knots[i], knots[i+1]), 0 before knots[0] and
    values[-1] after the last knot.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots.ndim != 1 or knots.size == 0:
            raise ValueError("knots and values must be 1-d arrays of equal length")
        if np.any(knots <= 0) or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be positive and strictly increasing")
        if np.any(values < 0) or np.any(np.diff(values) < 0):
            raise ValueError("values must be non-negative and non-decreasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        idx = np.searchsorted(self.knots, np.asarray(t, dtype=float), side="right") - 1
        return np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)

    @property
    def limit(self) -> float:
        return float(self.values[-1])

    def weighted_integral(self, alpha, r) -> float:
        """int_0^inf (t^-alpha g(t))^r dt / t, exact."""
        s = alpha * r
        upper = np.append(self.knots[1:], np.inf)
        pieces = self.values**r * (self.knots ** (-s) - upper ** (-s)) / s
        return float(np.sum(pieces))

    def weighted_sup(self, alpha) -> float:
        """sup_t t^-alpha g(t), attained at the left end of a step."""
        return float(np.max(self.knots ** (-alpha) * self.values))


def _weighted_integral(g, alpha, r) -> float:
    if isinstance(g, TabulatedIncreasing):
        return g.weighted_integral(alpha, r)
    s = alpha * r

    def integrand(u):
        v = float(g(math.exp(min(u, 700.0))))
        return 0.0 if v <= 0 else math.exp(r * math.log(v) - s * u)

    lo, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=1e-13, epsrel=1e-11, limit=400)
    hi, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    return lo + hi


def _weighted_sup(g, alpha) -> float:
    if isinstance(g, TabulatedIncreasing):
        return g.weighted_sup(alpha)
    t = np.geomspace(1e-8, 1e8, 20001)
    return float(np.max(t ** (-alpha) * np.asarray(g(t), dtype=float)))


def _verdict(lhs, rhs, tol):
    return bool(lhs <= rhs * (1.0 + tol) + tol)


def verify_lemma_embedding_p(g, alpha, p, q, c, tol=1e-6):
    """Check (int (t^-a g)^p dt/t)^(1/p) <= c^(2a) log(c)^(1/p - 1/q) (int (t^-a g)^q dt/t)^(1/q).

    ``g`` is a :class:`TabulatedIncreasing` (exact integrals) or a vectorized
    increasing callable (adaptive quadrature in log t).
    Returns ``(lhs, rhs, holds)``.
    """
    if not (1 <= q < p < math.inf):
        raise ValueError("need 1 <= q < p < inf")
    if not c > 1:
        raise ValueError("need c > 1")
    lhs = _weighted_integral(g, alpha, p) ** (1.0 / p)
    rhs = c ** (2 * alpha) * math.log(c) ** (1.0 / p - 1.0 / q) * _weighted_integral(g, alpha, q) ** (1.0 / q)
    return lhs, rhs, _verdict(lhs, rhs, tol)


def verify_lemma_embedding_inf(g, alpha, q, c, tol=1e-6):
    """Check sup_t t^-a g(t) <= c^(2a) log(c)^(-1/q) (int (t^-a g)^q dt/t)^(1/q)."""
    if not q >= 1:
        raise ValueError("need q >= 1")
    if not c > 1:
        raise ValueError("need c > 1")
    lhs = _weighted_sup(g, alpha)
    rhs = c ** (2 * alpha) * math.log(c) ** (-1.0 / q) * _weighted_integral(g, alpha, q) ** (1.0 / q)
    return lhs, rhs, _verdict(lhs, rhs, tol)


LIMIT_ALPHAS = (0.1, 0.05, 0.025, 0.0125)


def verify_lemma_limit(g, q, g_inf=None, rel_tol=0.02):
    """Extrapolate (a q int (t^-a g)^q dt/t)^(1/q) to a -> 0 and compare with g(inf).

    The scaled integral is evaluated for a in ``LIMIT_ALPHAS``; the last
    three values give the observed order of convergence, which drives one
    Richardson step.  Returns ``(limit_estimate, g_at_infinity, match)``.
    """
    if not q >= 1 or math.isinf(q):
        raise ValueError("q must be finite and >= 1")
    if g_inf is None:
        g_inf = g.limit if isinstance(g, TabulatedIncreasing) else float(g(1e300))
    vals = np.array([(a * q * _weighted_integral(g, a, q)) ** (1.0 / q) for a in LIMIT_ALPHAS])
    d1, d2 = vals[2] - vals[1], vals[3] - vals[2]
    if d1 == 0 or d2 == 0 or d1 * d2 < 0:
        limit = float(vals[-1])
    else:
        order = math.log2(d1 / d2)
        limit = float(vals[-1] + d2 / (2.0**order - 1.0)) if order > 0 else float(vals[-1])
    if g_inf == 0:
        match = abs(limit) <= 1e-12
    else:
        match = abs(limit - g_inf) <= rel_tol * abs(g_inf)
    return limit, float(g_inf), bool(match)


def _random_step(rng) -> TabulatedIncreasing:
    n = int(rng.integers(1, 9))
    knots = np.unique(10.0 ** rng.uniform(-3.0, 2.0, n))
    values = np.cumsum(rng.exponential(1.0, knots.size))
    return TabulatedIncreasing(knots, values)


LIMIT_TEST_FUNCTIONS = {
    "min(t,1)": (lambda t: np.minimum(t, 1.0), 1.0),
    "1-exp(-t)": (lambda t: -np.expm1(-np.asarray(t, dtype=float)), 1.0),
    "2t/(1+t)": (lambda t: 2.0 * np.asarray(t, dtype=float) / (1.0 + np.asarray(t, dtype=float)), 2.0),
}


def run_lemma_suite(trials: int = 100, seed: int = 0):
    """Randomized checks of the three inequalities for increasing functions.

    Lemmas 1 and 2 use random increasing step functions with random
    (alpha, p, q, c); the limit statement uses three analytic functions.
    Returns rows (lemma, case, alpha, p, q, c, lhs, rhs, holds).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    from .experiments import noise_generator

    rows = []
    rng = noise_generator(seed, 1)
    for i in range(trials):
        g = _random_step(rng)
        alpha = rng.uniform(0.05, 0.95)
        q = rng.uniform(1.0, 3.0)
        p = q + rng.uniform(0.1, 4.0)
        c = rng.uniform(1.05, 6.0)
        lhs, rhs, ok = verify_lemma_embedding_p(g, alpha, p, q, c)
        rows.append(("embedding_p", str(i), alpha, p, q, c, lhs, rhs, ok))
    rng = noise_generator(seed, 2)
    for i in range(trials):
        g = _random_step(rng)
        alpha = rng.uniform(0.05, 0.95)
        q = rng.uniform(1.0, 4.0)
        c = rng.uniform(1.05, 6.0)
        lhs, rhs, ok = verify_lemma_embedding_inf(g, alpha, q, c)
        rows.append(("embedding_inf", str(i), alpha, math.inf, q, c, lhs, rhs, ok))
    for j, (name, (g, g_inf)) in enumerate(LIMIT_TEST_FUNCTIONS.items()):
        q = (1.0, 2.0, 1.5)[j]
        limit, target, ok = verify_lemma_limit(g, q, g_inf=g_inf)
        rows.append(("limit", name, 0.0, math.nan, q, math.nan, limit, target, ok))
    return rows
