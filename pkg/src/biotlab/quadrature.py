"""Gauss rules on reference simplices, returned in barycentric coordinates."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_interval(npts: int):
    """Gauss-Legendre rule on [0, 1]: (points, weights)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def cell_rule(dim: int, degree: int):
    """Rule exact for polynomials of the given degree on the reference simplex.

    Returns barycentric points of shape (q, dim+1) and weights summing to the
    reference measure (1 in 1D, 1/2 in 2D).
    """
    n = degree // 2 + 1
    if dim == 1:
        x, w = gauss_interval(n)
        return np.stack([1 - x, x], axis=1), w
    # collapsed (Duffy) product rule; one extra point absorbs the Jacobian
    xa, wa = gauss_interval(n + 1)
    xb, wb = gauss_interval(n)
    s, t = np.meshgrid(xa, xb, indexing="ij")
    ws = np.outer(wa, wb) * (1 - s)
    x = s.ravel()
    y = (t * (1 - s)).ravel()
    pts = np.stack([1 - x - y, x, y], axis=1)
    return pts, ws.ravel()


def face_points(dim: int, local_face: int, npts: int):
    """Barycentric points on a local face of the reference cell, with weights
    summing to one (multiply by the face measure)."""
    if dim == 1:
        lam = np.zeros((1, 2))
        lam[0, local_face] = 1.0
        return lam, np.ones(1)
    x, w = gauss_interval(npts)
    a, b = (local_face + 1) % 3, (local_face + 2) % 3
    lam = np.zeros((npts, 3))
    lam[:, a] = 1 - x
    lam[:, b] = x
    return lam, w
