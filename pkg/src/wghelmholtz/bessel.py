"""Bessel functions of the first kind J_nu(x) for real nu in [0, 4], x in [0, 1e4].

Three branches, all vectorized over ``x``:

* ``x <= 8``: ascending power series;
* ``8 < x <= 30``: Miller backward recurrence normalized with
  ``(x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! * J_{mu+2k}(x)``;
* ``x > 30``: Hankel large-argument expansion.

In double precision the plain series loses about ``log10(exp(x))`` digits to
cancellation, which is why it stops at 8.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["bessel_j", "bessel_j_prime", "small_argument", "asymptotic",
           "SERIES_LIMIT", "ASYMPTOTIC_LIMIT"]

SERIES_LIMIT = 8.0
ASYMPTOTIC_LIMIT = 30.0
MAX_ORDER = 4.0
MAX_ARGUMENT = 1e4


def _series(nu: float, x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    q = half * half
    term = half ** nu / math.gamma(nu + 1.0)
    total = term.copy()
    for m in range(1, 80):
        term = term * (-q / (m * (m + nu)))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _miller(nu: float, x: np.ndarray) -> np.ndarray:
    mu = nu - math.floor(nu)
    n_target = int(math.floor(nu))
    start = int(np.max(x)) + 60 + n_target
    start += start % 2
    j_next = np.zeros_like(x)          # order mu + n + 1
    j_cur = np.full_like(x, 1e-30)     # order mu + n
    norm = np.zeros_like(x)
    target = np.zeros_like(x)
    # normalization weights: w[0] = Gamma(mu + 1), w[k] = (mu + 2k) Gamma(mu + k) / k!
    gamma1 = math.gamma(mu + 1.0)
    w = [gamma1]
    ratio = gamma1                     # Gamma(mu + k) / k!
    for k in range(1, start // 2 + 1):
        if k > 1:
            ratio *= (mu + k - 1) / k
        w.append((mu + 2 * k) * ratio)
    for n in range(start, -1, -1):
        if n == n_target:
            target = j_cur.copy()
        if n % 2 == 0:
            norm += w[n // 2] * j_cur
        if n == 0:
            break
        j_prev = (2.0 * (mu + n) / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e200
        if np.any(big):
            for arr in (j_next, j_cur, norm, target):
                arr[big] *= 1e-200
    return target * (0.5 * x) ** mu / norm


def _hankel_sums(nu: float, x: np.ndarray):
    four_nu2 = 4.0 * nu * nu
    t = np.ones_like(x)
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones_like(x, dtype=bool)
    for k in range(1, 200):
        t = t * (four_nu2 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(t)
        # asymptotic series: stop each point once its terms start growing
        active &= mag < prev
        contrib = np.where(active, t, 0.0)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P += sign * contrib
        else:
            Q += sign * contrib
        prev = mag
        active &= mag > 1e-18
        if not active.any():
            break
    return P, Q


def asymptotic(nu: float, x) -> np.ndarray:
    """Large-argument branch (accurate for x >~ 25)."""
    x = np.asarray(x, dtype=float)
    P, Q = _hankel_sums(nu, x)
    chi = x - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def small_argument(nu: float, x) -> np.ndarray:
    """Series / backward-recurrence branch (x <= 30 and a little beyond)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    s = x <= SERIES_LIMIT
    if s.any():
        out[s] = _series(nu, x[s])
    if (~s).any():
        out[~s] = _miller(nu, x[~s])
    return out


def _bessel_j(nu: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty_like(flat)
    small = flat <= ASYMPTOTIC_LIMIT
    if small.any():
        out[small] = small_argument(nu, flat[small])
    if (~small).any():
        out[~small] = asymptotic(nu, flat[~small])
    return out.reshape(x.shape)


def bessel_j(nu: float, x):
    """J_nu(x) for 0 <= nu <= 4 and 0 <= x <= 1e4.

    Returns a float for scalar input, an array otherwise.
    """
    nu = float(nu)
    if not 0.0 <= nu <= MAX_ORDER:
        raise ValueError(f"order {nu} outside the validated range [0, {MAX_ORDER}]")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > MAX_ARGUMENT) or np.any(np.isnan(xa)):
        raise ValueError(f"argument outside the validated range [0, {MAX_ARGUMENT:g}]")
    out = _bessel_j(nu, xa)
    return float(out) if out.ndim == 0 else out


def bessel_j_prime(nu: float, x):
    """dJ_nu/dx via ``(nu/x) J_nu - J_{nu+1}``, with the limit at x = 0."""
    nu = float(nu)
    xa = np.asarray(x, dtype=float)
    if not 0.0 <= nu <= MAX_ORDER:
        raise ValueError(f"order {nu} outside the validated range [0, {MAX_ORDER}]")
    out = np.empty_like(xa)
    pos = xa > 0
    xp = xa[pos]
    out[pos] = (nu / xp) * _bessel_j(nu, xp) - _bessel_j(nu + 1.0, xp)
    if nu == 0.0 or nu > 1.0:
        lim = 0.0
    elif nu == 1.0:
        lim = 0.5
    else:
        lim = np.inf
    out[~pos] = lim
    return float(out) if out.ndim == 0 else out
