"""Simplex quadrature via conical (collapsed coordinate) Gauss-Jacobi products.

The rules are exact for any requested polynomial degree, which keeps the
assembly of constant-coefficient forms exact up to roundoff.  Points are
stored in barycentric coordinates; weights on the reference tetrahedron
sum to its volume 1/6.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature points (barycentric) and weights on a reference simplex."""

    points: np.ndarray  # (nq, nvert) barycentric coordinates
    weights: np.ndarray  # (nq,)
    degree: int  # exact for total polynomial degree <= degree

    @property
    def npoints(self):
        return self.points.shape[0]

    @property
    def cartesian(self):
        """Cartesian coordinates w.r.t. the unit reference simplex."""
        return self.points[:, 1:].copy()


def _gauss01(n, alpha):
    """Gauss-Jacobi nodes/weights for int_0^1 (1-u)^alpha f(u) du."""
    x, w = roots_jacobi(n, alpha, 0.0)
    u = 0.5 * (x + 1.0)
    # d(u) scaling plus the (1-u)^alpha factor absorbed by the weight
    w = w * 0.5 ** (alpha + 1)
    return u, w


def segment_rule(degree):
    """Gauss-Legendre rule on [0, 1], exact to the given degree."""
    n = degree // 2 + 1
    u, w = _gauss01(n, 0)
    pts = np.column_stack([1.0 - u, u])
    return QuadratureRule(points=pts, weights=w, degree=2 * n - 1)


def triangle_rule(degree):
    """Conical product rule on the unit triangle {u, v >= 0, u + v <= 1}."""
    n = degree // 2 + 1
    u1, w1 = _gauss01(n, 1)
    u2, w2 = _gauss01(n, 0)
    uu, vv = np.meshgrid(u1, u2, indexing="ij")
    u = uu.ravel()
    v = (vv * (1.0 - uu)).ravel()
    w = np.outer(w1, w2).ravel()
    pts = np.column_stack([1.0 - u - v, u, v])
    return QuadratureRule(points=pts, weights=w, degree=2 * n - 1)


def tetrahedron_rule(degree):
    """Conical product rule on the unit tetrahedron, exact to ``degree``."""
    n = degree // 2 + 1
    u1, w1 = _gauss01(n, 2)
    u2, w2 = _gauss01(n, 1)
    u3, w3 = _gauss01(n, 0)
    a, b, c = np.meshgrid(u1, u2, u3, indexing="ij")
    x = a.ravel()
    y = (b * (1.0 - a)).ravel()
    z = (c * (1.0 - a) * (1.0 - b)).ravel()
    w = (w1[:, None, None] * w2[None, :, None] * w3[None, None, :]).ravel()
    pts = np.column_stack([1.0 - x - y - z, x, y, z])
    return QuadratureRule(points=pts, weights=w, degree=2 * n - 1)
