"""Gauss rules on the reference triangle and the unit interval."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed (Duffy) Gauss rule exact for polynomials of total ``degree``.

    Returns barycentric points ``(nq, 3)`` and weights summing to 1/2, the
    area of the reference triangle.
    """
    m = max(1, (degree + 3) // 2)
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    weights = (wu * wv * (1.0 - u)).ravel()
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    bary.flags.writeable = False
    weights.flags.writeable = False
    return bary, weights


@lru_cache(maxsize=None)
def line_rule(n: int):
    """``n``-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
