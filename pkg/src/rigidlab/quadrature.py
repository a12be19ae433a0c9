"""Gauss-Legendre quadrature helpers for spline segments."""
from __future__ import annotations

import numpy as np

_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int):
    if n not in _CACHE:
        _CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _CACHE[n]


def segment_quadrature(knots: np.ndarray, n_per_segment: int = 16):
    """Composite Gauss-Legendre nodes/weights over consecutive knot intervals."""
    x, w = gauss_legendre(n_per_segment)
    a = knots[:-1][:, None]
    b = knots[1:][:, None]
    t = 0.5 * (b - a) * (x[None, :] + 1.0) + a
    wt = 0.5 * (b - a) * w[None, :]
    return t.ravel(), wt.ravel()
