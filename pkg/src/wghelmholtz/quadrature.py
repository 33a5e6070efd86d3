"""Quadrature rules on the reference triangle and on [-1, 1].

The reference triangle is (0,0), (1,0), (0,1); weights sum to 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRIANGLE_DEGREE = 30
MAX_EDGE_DEGREE = 61


@dataclass(frozen=True)
class Rule:
    points: np.ndarray  # (nq, dim)
    weights: np.ndarray  # (nq,)
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _radon7() -> Rule:
    r15 = np.sqrt(15.0)
    a1 = (6.0 - r15) / 21.0
    a2 = (6.0 + r15) / 21.0
    w1 = (155.0 - r15) / 1200.0
    w2 = (155.0 + r15) / 1200.0
    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [a1, a1, 1 - 2 * a1], [a1, 1 - 2 * a1, a1], [1 - 2 * a1, a1, a1],
        [a2, a2, 1 - 2 * a2], [a2, 1 - 2 * a2, a2], [1 - 2 * a2, a2, a2],
    ])
    w = np.array([9 / 40, w1, w1, w1, w2, w2, w2]) / 2.0
    return Rule(bary[:, 1:].copy(), w, 5)


def _collapsed_gauss(degree: int) -> Rule:
    # Duffy-collapsed Gauss-Jacobi x Gauss-Legendre product rule
    n = degree // 2 + 1
    xa, wa = roots_jacobi(n, 1.0, 0.0)
    xb, wb = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (1 + xa)   # collapsed direction, weight (1 - s)
    t = 0.5 * (1 + xb)
    S, T = np.meshgrid(s, t, indexing="ij")
    x = S
    y = (1 - S) * T
    w = np.outer(wa / 4.0, wb / 2.0)
    pts = np.column_stack([x.ravel(), y.ravel()])
    return Rule(pts, w.ravel(), degree)


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int = 5) -> Rule:
    """Rule exact for all monomials ``x**a * y**b`` with ``a + b <= degree``.

    Degrees up to 5 use the 7-point Radon rule; higher degrees a collapsed
    Gauss product rule.
    """
    if degree < 0 or degree > MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    if degree <= 5:
        return _radon7()
    return _collapsed_gauss(degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int = 5) -> Rule:
    """Gauss-Legendre rule on [-1, 1]; ``n`` points are exact to degree ``2n - 1``."""
    if degree < 0 or degree > MAX_EDGE_DEGREE:
        raise ValueError(f"unsupported edge quadrature degree {degree}")
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return Rule(x[:, None], w, 2 * n - 1)


@lru_cache(maxsize=None)
def subdivided_triangle_rule(degree: int = 5, levels: int = 0) -> Rule:
    """Composite rule: the reference triangle split ``4**levels`` times.

    Keeps the polynomial exactness of the base rule while shrinking the
    per-piece size, for oscillatory integrands.
    """
    base = triangle_quadrature(degree)
    if levels == 0:
        return base
    tris = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    for _ in range(levels):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tris = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1), np.stack([bc, ca, ab], 1),
        ])
    p = base.points
    # affine map of the base points into each sub-triangle
    pts = (tris[:, None, 0] + p[None, :, 0, None] * (tris[:, None, 1] - tris[:, None, 0])
           + p[None, :, 1, None] * (tris[:, None, 2] - tris[:, None, 0]))
    w = np.tile(base.weights, len(tris)) / len(tris)
    return Rule(pts.reshape(-1, 2), w, base.degree)


@lru_cache(maxsize=None)
def subdivided_edge_rule(degree: int = 5, levels: int = 0) -> Rule:
    base = edge_quadrature(degree)
    if levels == 0:
        return base
    m = 2 ** levels
    left = -1.0 + 2.0 * np.arange(m) / m
    pts = left[:, None] + (base.points[:, 0][None, :] + 1.0) / m
    w = np.tile(base.weights, m) / m
    return Rule(pts.reshape(-1, 1), w, base.degree)


def subdivision_levels(kappa: float, h: float) -> int:
    """One extra refinement level of the load/projection rules when ``kappa*h > 1``."""
    return 1 if kappa * h > 1.0 else 0
