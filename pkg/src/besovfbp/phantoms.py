"""Ellipse-based test phantoms with analytic Radon transforms.

Every phantom is a weighted sum of components ``p_sigma(x_map(x, y))`` where
``x_map`` sends an ellipse onto the unit disk and

    p_sigma(u, v) = (1 - u**2 - v**2)**sigma   inside the unit disk, else 0.

``sigma = 0`` gives the characteristic function of the ellipse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "EllipseMap",
    "PhantomComponent",
    "Phantom",
    "SHEPP_LOGAN_ELLIPSES",
    "SMOOTH_ELLIPSES",
    "shepp_logan",
    "smooth_phantom",
    "unit_disk",
    "load_phantom",
    "phantom_from_records",
    "phantom_to_records",
    "radon_unit_profile",
]

# Standard Shepp-Logan parameters: (a, b, h, k, phi_degrees, weight), with the
# original intensity values.
SHEPP_LOGAN_ELLIPSES = (
    (0.69, 0.92, 0.0, 0.0, 0.0, 2.0),
    (0.6624, 0.874, 0.0, -0.0184, 0.0, -0.98),
    (0.11, 0.31, 0.22, 0.0, -18.0, -0.02),
    (0.16, 0.41, -0.22, 0.0, 18.0, -0.02),
    (0.21, 0.25, 0.0, 0.35, 0.0, 0.01),
    (0.046, 0.046, 0.0, 0.1, 0.0, 0.01),
    (0.046, 0.046, 0.0, -0.1, 0.0, 0.01),
    (0.046, 0.023, -0.08, -0.605, 0.0, 0.01),
    (0.023, 0.023, 0.0, -0.606, 0.0, 0.01),
    (0.023, 0.046, 0.06, -0.605, 0.0, 0.01),
)

# Smooth phantom: three ellipses with weights (1, -3/2, 3/2), phi in radians.
SMOOTH_ELLIPSES = (
    (0.51, 0.31, 0.22, 0.0, 2 * math.pi / 5, 1.0),
    (0.51, 0.36, -0.22, 0.0, 3 * math.pi / 5, -1.5),
    (0.5, 0.8, 0.0, 0.2, math.pi / 2, 1.5),
)

_SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class EllipseMap:
    """Affine map sending the ellipse (a, b, h, k, phi) onto the unit disk."""

    a: float
    b: float
    h: float = 0.0
    k: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")

    def __call__(self, x, y):
        c, s = math.cos(self.phi), math.sin(self.phi)
        dx = np.asarray(x, dtype=float) - self.h
        dy = np.asarray(y, dtype=float) - self.k
        return (dx * c + dy * s) / self.a, (-dx * s + dy * c) / self.b

    def projected_radius(self, theta):
        """rho(theta) = sqrt(a^2 cos^2(theta - phi) + b^2 sin^2(theta - phi))."""
        ang = np.asarray(theta, dtype=float) - self.phi
        return np.sqrt((self.a * np.cos(ang)) ** 2 + (self.b * np.sin(ang)) ** 2)

    def quadratic_form(self):
        """Coefficients (A, B, C) with u^2 + v^2 = A X^2 + 2 B X Y + C Y^2."""
        c, s = math.cos(self.phi), math.sin(self.phi)
        ia2, ib2 = 1.0 / self.a**2, 1.0 / self.b**2
        return (c * c * ia2 + s * s * ib2, c * s * (ia2 - ib2), s * s * ia2 + c * c * ib2)


def radon_unit_profile(t, sigma: float):
    """Radon transform of p_sigma on the unit disk (independent of the angle)."""
    t = np.asarray(t, dtype=float)
    const = math.sqrt(math.pi) * math.gamma(sigma + 1) / math.gamma(sigma + 1.5)
    inside = np.clip(1.0 - t * t, 0.0, None)
    return const * inside ** (sigma + 0.5)


@dataclass(frozen=True)
class PhantomComponent:
    map: EllipseMap
    weight: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"profile order must be >= 0, got {self.sigma}")

    def _interior(self, x, y):
        """Broadcast inputs and the flat indices of points in the closed ellipse."""
        X, Y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        X, Y = X.ravel(), Y.ravel()
        m = self.map
        # cheap bounding-box test first, exact quadratic test on the survivors
        ex, ey = m.projected_radius(0.0), m.projected_radius(0.5 * math.pi)
        idx = np.flatnonzero((np.abs(X - m.h) <= ex) & (np.abs(Y - m.k) <= ey))
        u, v = m(X[idx], Y[idx])
        q = u * u + v * v
        keep = q <= 1.0
        return X, Y, idx[keep], q[keep]

    def evaluate(self, x, y):
        X, Y, idx, q = self._interior(x, y)
        out = np.zeros(X.size)
        out[idx] = self.weight if self.sigma == 0 else self.weight * (1.0 - q) ** self.sigma
        return out.reshape(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def radon(self, t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        m = self.map
        rho = m.projected_radius(theta)
        shifted = t - m.h * np.cos(theta) - m.k * np.sin(theta)
        return self.weight * m.a * m.b / rho * radon_unit_profile(shifted / rho, self.sigma)

    def derivative(self, j1: int, j2: int, x, y):
        if j1 == j2 == 0:
            return self.evaluate(x, y)
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        X, Y, idx, q = self._interior(x, y)
        A, B, C = self.map.quadratic_form()
        dx = X[idx] - self.map.h
        dy = Y[idx] - self.map.k
        qx = 2 * (A * dx + B * dy)
        qy = 2 * (B * dx + C * dy)
        one_minus = 1.0 - q
        total = np.zeros(idx.size)
        for (m, pa, pb), coef in _chain_terms(j1, j2, 2 * A, 2 * B, 2 * C).items():
            # h^(m)(q) for h(q) = (1 - q)^sigma
            falling = math.prod(self.sigma - i for i in range(m))
            if falling == 0:
                continue
            hm = (-1) ** m * falling * one_minus ** (self.sigma - m)
            total = total + coef * hm * qx**pa * qy**pb
        out = np.zeros(X.size)
        out[idx] = self.weight * total
        return out.reshape(shape)


@lru_cache(maxsize=None)
def _chain_terms(j1, j2, qxx, qxy, qyy):
    """Expand d^j1/dx^j1 d^j2/dy^j2 h(Q) for quadratic Q.

    Returns {(m, a, b): coeff} meaning sum coeff * h^(m)(Q) * Qx^a * Qy^b.
    """
    terms = {(0, 0, 0): 1.0}

    def diff(terms, second_own, second_mixed, which):
        out = {}
        for (m, a, b), c in terms.items():
            # d/d? of h^(m)(Q) = h^(m+1)(Q) * Q_?
            key = (m + 1, a + (which == 0), b + (which == 1))
            out[key] = out.get(key, 0.0) + c
            own, other = (a, b) if which == 0 else (b, a)
            if own:
                key = (m, a - (which == 0), b - (which == 1))
                out[key] = out.get(key, 0.0) + c * own * second_own
            if other:
                key = (m, a - (which == 1), b - (which == 0))
                out[key] = out.get(key, 0.0) + c * other * second_mixed
        return {k: v for k, v in out.items() if v != 0.0}

    for _ in range(j1):
        terms = diff(terms, qxx, qxy, 0)
    for _ in range(j2):
        terms = diff(terms, qyy, qxy, 1)
    return terms


@dataclass(frozen=True)
class Phantom:
    """Weighted sum of ellipse-mapped profiles, supported in the unit disk."""

    components: tuple[PhantomComponent, ...]
    name: str = "phantom"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def min_sigma(self) -> float:
        return min((c.sigma for c in self.components), default=math.inf)

    def scaled(self, factor: float) -> "Phantom":
        comps = tuple(
            PhantomComponent(c.map, c.weight * factor, c.sigma) for c in self.components
        )
        return Phantom(comps, name=f"{factor:g}*{self.name}")

    def evaluate(self, x, y):
        """Pointwise values; exactly 0 outside the closed unit disk."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for comp in self.components:
            out = out + comp.evaluate(x, y)
        return np.where(x * x + y * y > (1.0 + _SUPPORT_TOL) ** 2, 0.0, out)

    __call__ = evaluate

    def radon_analytic(self, t, theta):
        """Exact line integrals over {x cos(theta) + y sin(theta) = t}."""
        theta = np.asarray(theta, dtype=float)
        if np.any((theta < 0) | (theta >= math.pi)):
            raise ValueError("theta must lie in [0, pi)")
        return self._radon(t, theta)

    def _radon(self, t, theta):
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast(t, np.asarray(theta)).shape)
        for comp in self.components:
            out = out + comp.radon(t, theta)
        return out

    def partial_derivative(self, j1: int, j2: int, x, y):
        """Analytic d^(j1+j2) f / dx^j1 dy^j2 (inside-limit on ellipse boundaries)."""
        if j1 < 0 or j2 < 0:
            raise ValueError("derivative orders must be non-negative")
        if j1 + j2 == 0:
            return self.evaluate(x, y)
        if self.min_sigma < j1 + j2:
            raise ValueError(
                f"derivative of order {j1 + j2} needs every profile order >= {j1 + j2}; "
                f"smallest is {self.min_sigma}"
            )
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for comp in self.components:
            out = out + comp.derivative(j1, j2, x, y)
        return out

    def render(self, side: int):
        """Values at the centers of a side x side pixel grid on [-1, 1]^2.

        Row index runs along y, column index along x.
        """
        from .transforms import pixel_centers

        c = pixel_centers(side)
        X, Y = np.meshgrid(c, c)
        return self.evaluate(X, Y)


def _from_table(table, sigma, name, degrees):
    comps = []
    for a, b, h, k, phi, w in table:
        phi = math.radians(phi) if degrees else phi
        comps.append(PhantomComponent(EllipseMap(a, b, h, k, phi), w, sigma))
    return Phantom(tuple(comps), name=name)


def shepp_logan() -> Phantom:
    return _from_table(SHEPP_LOGAN_ELLIPSES, 0.0, "shepp-logan", degrees=True)


def smooth_phantom(sigma: float) -> Phantom:
    return _from_table(SMOOTH_ELLIPSES, float(sigma), f"smooth:{sigma:g}", degrees=False)


def unit_disk(sigma: float = 0.0, weight: float = 1.0) -> Phantom:
    comp = PhantomComponent(EllipseMap(1.0, 1.0), weight, float(sigma))
    return Phantom((comp,), name=f"disk:{sigma:g}")


def phantom_from_records(records, name="custom") -> Phantom:
    comps = []
    for rec in records:
        m = EllipseMap(
            float(rec["a"]),
            float(rec["b"]),
            float(rec.get("h", 0.0)),
            float(rec.get("k", 0.0)),
            float(rec.get("phi", 0.0)),
        )
        comps.append(PhantomComponent(m, float(rec.get("weight", 1.0)), float(rec.get("sigma", 0.0))))
    return Phantom(tuple(comps), name=name)


def phantom_to_records(phantom: Phantom) -> list[dict]:
    return [
        {
            "a": c.map.a,
            "b": c.map.b,
            "h": c.map.h,
            "k": c.map.k,
            "phi": c.map.phi,
            "weight": c.weight,
            "sigma": c.sigma,
        }
        for c in phantom.components
    ]


def load_phantom(spec: str | Path) -> Phantom:
    """Resolve a built-in name or a JSON file of ellipse records.

    Built-ins: ``shepp-logan``, ``smooth:<sigma>``, ``disk:<sigma>``.
    """
    text = str(spec)
    if text == "shepp-logan":
        return shepp_logan()
    if text.startswith("smooth:"):
        return smooth_phantom(float(text.split(":", 1)[1]))
    if text.startswith("disk:"):
        return unit_disk(float(text.split(":", 1)[1]))
    path = Path(text)
    if not path.exists():
        raise ValueError(f"unknown phantom {text!r} (not a built-in name or an existing file)")
    data = json.loads(path.read_text())
    if isinstance(data, dict):
        return phantom_from_records(data["components"], name=data.get("name", path.stem))
    return phantom_from_records(data, name=path.stem)
