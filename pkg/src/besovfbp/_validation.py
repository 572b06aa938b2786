"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_bandwidth_multiple(k) -> int:
    if not isinstance(k, numbers.Integral) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be a positive integer (L = k*pi), got {k!r}")
    return int(k)


def check_sinogram_array(X, grid):
    """Return (stack of shape (n, 2M+1, N), was_single) for one sinogram or a stack."""
    X = check_array(X, ensure_2d=False, allow_nd=True, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != grid.shape:
        raise ValueError(
            f"expected sinogram(s) of shape {grid.shape} (2M+1, N) for k={grid.M}, got {X.shape}"
        )
    return X, single


def parse_p(text) -> float:
    """Parse exponents like '2', '4/3', 'inf'."""
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "oo"):
        return float("inf")
    if "/" in s:
        num, den = s.split("/", 1)
        value = float(num) / float(den)
    else:
        value = float(s)
    if not value >= 1:
        raise ValueError(f"p must be >= 1, got {text!r}")
    return value
