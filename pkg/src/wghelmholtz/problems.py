"""Benchmark Helmholtz problems with closed-form solutions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import ExactSolution, ProblemSpec
from .bessel import bessel_j, bessel_j_prime

__all__ = ["DielectricProfile", "convex_problem", "pacman_problem",
           "inhomogeneous_problem", "radial_gradient"]


def _polar(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x, y, np.hypot(x, y)


def radial_gradient(x, y, ur) -> np.ndarray:
    """``ur * (x/r, y/r)`` with the gradient set to zero at the origin."""
    x, y, r = _polar(x, y)
    safe = np.where(r > 0, r, 1.0)
    scale = np.where(r > 0, ur / safe, 0.0)
    return np.stack([scale * x, scale * y], axis=-1)


def convex_problem(k: float) -> ProblemSpec:
    """Robin problem on the unit hexagon with ``d = 1``, ``f = sin(kr)/r``.

    Exact solution ``u = cos(kr)/k - C J0(kr)`` with
    ``C = (cos k + i sin k) / (k (J0(k) + i J1(k)))``.
    """
    if not k > 0:
        raise ValueError("wave number must be positive")
    C = (np.cos(k) + 1j * np.sin(k)) / (k * (bessel_j(0, k) + 1j * bessel_j(1, k)))

    def u(x, y):
        _, _, r = _polar(x, y)
        return np.cos(k * r) / k - C * bessel_j(0, k * r)

    def grad(x, y):
        _, _, r = _polar(x, y)
        ur = -np.sin(k * r) + C * k * bessel_j(1, k * r)
        return radial_gradient(x, y, ur)

    def f(x, y):
        _, _, r = _polar(x, y)
        # k * sinc(kr / pi) = sin(kr)/r, equal to k at r = 0
        return k * np.sinc(k * r / np.pi)

    def g(x, y, nx, ny):
        gr = grad(x, y)
        return gr[..., 0] * nx + gr[..., 1] * ny + 1j * k * u(x, y)

    return ProblemSpec(kappa=k, f=f, g=g, bc="robin", d=1.0,
                       exact=ExactSolution(u, grad), name=f"convex(k={k:g})")


def pacman_problem(k: float, xi: float) -> ProblemSpec:
    """Dirichlet problem with ``f = 0`` and ``u = J_xi(kr) cos(xi * theta)``.

    ``theta = atan2(y, x)`` in (-pi, pi]; for non-integer ``xi`` the field is
    discontinuous across the negative x-axis, which the slit-disk domain excludes.
    """
    if not k > 0:
        raise ValueError("wave number must be positive")
    if not xi > 0:
        raise ValueError("xi must be positive")
    integer = float(xi).is_integer()

    def _angle(x, y):
        x, y, r = _polar(x, y)
        if not integer and np.any((y == 0) & (x < 0)):
            raise ValueError("evaluation on the excluded negative x-axis")
        return np.arctan2(y, x), r

    def u(x, y):
        theta, r = _angle(x, y)
        return bessel_j(xi, k * r) * np.cos(xi * theta) + 0j

    def grad(x, y):
        theta, r = _angle(x, y)
        ur = k * bessel_j_prime(xi, k * r) * np.cos(xi * theta)
        safe = np.where(r > 0, r, 1.0)
        ut_over_r = np.where(r > 0, -xi * bessel_j(xi, k * r) * np.sin(xi * theta) / safe, 0.0)
        c, s = np.cos(theta), np.sin(theta)
        gx = ur * c - ut_over_r * s
        gy = ur * s + ut_over_r * c
        return np.stack([gx, gy], axis=-1) + 0j

    def f(x, y):
        return np.zeros(np.shape(x), dtype=complex)

    return ProblemSpec(kappa=k, f=f, g=u, bc="dirichlet", d=1.0,
                       exact=ExactSolution(u, grad), name=f"pacman(k={k:g}, xi={xi:g})")


@dataclass(frozen=True)
class DielectricProfile:
    """Smoothstep blend ``d(r) = S(r)/eps1 + (1 - S(r))/eps2`` between radii a and b."""

    eps1: float = 2.0
    eps2: float = 80.0
    a: float = 1.0
    b: float = 3.0
    R: float = 5.0

    def __post_init__(self):
        if not (0 < self.a < self.b < self.R):
            raise ValueError("profile radii must satisfy 0 < a < b < R")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("dielectric constants must be positive")

    def _t(self, r):
        return (self.b - np.asarray(r, dtype=float)) / (self.b - self.a)

    def S(self, r):
        r = np.asarray(r, dtype=float)
        t = self._t(r)
        mid = -2 * t ** 3 + 3 * t ** 2
        return np.where(r < self.a, 1.0, np.where(r > self.b, 0.0, mid))

    def S_prime(self, r):
        r = np.asarray(r, dtype=float)
        t = self._t(r)
        # chain rule through t = (b - r)/(b - a)
        mid = (6 * t ** 2 - 6 * t) / (self.b - self.a)
        return np.where((r < self.a) | (r > self.b), 0.0, mid)

    def d(self, r):
        s = self.S(r)
        return s / self.eps1 + (1 - s) / self.eps2

    def d_prime(self, r):
        return (1 / self.eps1 - 1 / self.eps2) * self.S_prime(r)


def inhomogeneous_problem(k: float, profile: DielectricProfile | None = None) -> ProblemSpec:
    """Dirichlet problem on the disk of radius ``profile.R`` with ``u = J0(kr)``.

    ``f = k^2 (d - 1) J0(kr) + k d'(r) J1(kr)``.
    """
    if not k > 0:
        raise ValueError("wave number must be positive")
    prof = profile or DielectricProfile()

    def u(x, y):
        _, _, r = _polar(x, y)
        return bessel_j(0, k * r) + 0j

    def grad(x, y):
        _, _, r = _polar(x, y)
        return radial_gradient(x, y, -k * bessel_j(1, k * r)) + 0j

    def d(x, y):
        return prof.d(np.hypot(x, y))

    def f(x, y):
        _, _, r = _polar(x, y)
        return (k ** 2 * (prof.d(r) - 1) * bessel_j(0, k * r)
                + k * prof.d_prime(r) * bessel_j(1, k * r)) + 0j

    return ProblemSpec(kappa=k, f=f, g=u, bc="dirichlet", d=d,
                       exact=ExactSolution(u, grad), name=f"inhomogeneous(k={k:g})")
