"""Bessel functions of the first kind, Gegenbauer polynomials, Gamma helpers.

Bessel orders are restricted to integers and half-integers (the orders that
occur in polar and spherical expansions). Values are accurate to about
1e-12 absolute on ``0 <= r <= R_MAX``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DomainError, UnsupportedOrderError

R_MAX = 50.0
SERIES_LIMIT = 8.0
GEGENBAUER_MAX_DEGREE = 200

_SQRT_PI = math.sqrt(math.pi)


def _as_order(order, allow_negative_half: bool = False) -> float:
    frac = Fraction(order).limit_denominator(4)
    if abs(float(frac) - float(order)) > 1e-12 or frac.denominator not in (1, 2):
        raise UnsupportedOrderError(f"order {order!r} is not an integer or half-integer")
    nu = float(frac)
    lowest = -0.5 if allow_negative_half else 0.0
    if nu < lowest:
        raise UnsupportedOrderError(f"order {order!r} is negative")
    return nu


def gamma_half(x: float) -> float:
    """Gamma at a positive integer or half-integer, by the functional equation."""
    twice = 2 * x
    if abs(twice - round(twice)) > 1e-12 or x <= 0:
        raise DomainError(f"gamma_half needs a positive (half-)integer, got {x}")
    if round(twice) % 2 == 0:
        return float(math.factorial(int(round(x)) - 1))
    value = _SQRT_PI
    t = 0.5
    while t < x - 1e-12:
        value *= t
        t += 1.0
    return value


def log_gamma_half(x: float) -> float:
    """log Gamma(x) for positive integer or half-integer x, without overflow."""
    twice = 2 * x
    if abs(twice - round(twice)) > 1e-12 or x <= 0:
        raise DomainError(f"log_gamma_half needs a positive (half-)integer, got {x}")
    if round(twice) % 2 == 0:
        t, acc = 1.0, 0.0
    else:
        t, acc = 0.5, math.log(_SQRT_PI)
    while t < x - 1e-12:
        acc += math.log(t)
        t += 1.0
    return acc


def leading_coefficient(order) -> float:
    """Coefficient a with J_nu(r) = a r**nu (1 + O(r**2)), i.e. 1/(2**nu Gamma(nu+1))."""
    nu = _as_order(order)
    return math.exp(-nu * math.log(2.0) - log_gamma_half(nu + 1.0))


def _series(nu: float, r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    pos = r > 0
    if nu == 0.0:
        out[~pos] = 1.0
    elif nu < 0:
        out[~pos] = np.inf
    if not pos.any():
        return out
    rp = r[pos]
    half = 0.5 * rp
    term = np.exp(nu * np.log(half) - log_gamma_half(nu + 1.0))
    total = term.copy()
    peak = np.abs(term)
    q = -half * half
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total += term
        mag = np.abs(term)
        peak = np.maximum(peak, mag)
        if np.all(mag <= 1e-18 * peak) or k > 400:
            break
    out[pos] = total
    return out


def _miller(nu: float, r: float) -> float:
    """Downward recurrence, normalized by an exact identity, for r > SERIES_LIMIT."""
    mu = nu % 1.0
    lowest = 0 if mu == 0.0 else -1  # slot j holds order mu + j
    top = max(nu, r)
    start = int(top + 12.0 * math.sqrt(top) + 40)
    start += start % 2
    f = np.zeros(start + 2 - lowest)
    f[start - lowest] = 1e-30
    for j in range(start, lowest, -1):
        f[j - 1 - lowest] = (2.0 * (mu + j) / r) * f[j - lowest] - f[j + 1 - lowest]
        if abs(f[j - 1 - lowest]) > 1e250:
            f *= 1e-250
    target = int(round(nu - mu)) - lowest
    if mu == 0.0:
        return f[target] / (f[0] + 2.0 * f[2:start + 1:2].sum())
    # half-integer: fit the scale to J_{1/2} and J_{-1/2} in closed form
    a, b = f[1], f[0]
    pref = math.sqrt(2.0 / (math.pi * r))
    scale = (a * pref * math.sin(r) + b * pref * math.cos(r)) / (a * a + b * b)
    return f[target] * scale


def _bessel(nu: float, r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("Bessel functions are evaluated for r >= 0 only")
    if np.any(arr > R_MAX):
        raise DomainError(f"r exceeds the supported range [0, {R_MAX}]")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_LIMIT
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out[small] = _series(nu, flat[small])
    for i in np.flatnonzero(~small):
        out[i] = _miller(nu, float(flat[i]))
    out = out.reshape(np.shape(arr))
    return float(out) if np.ndim(arr) == 0 else out


def bessel_j(order, r):
    """J_order(r) for integer or half-integer ``order >= 0``; ``r`` may be an array."""
    return _bessel(_as_order(order), r)


def bessel_j_derivative(order, r):
    """dJ_order/dr = (J_{order-1} - J_{order+1}) / 2, with J_{-1} = -J_1."""
    nu = _as_order(order)
    if nu == 0.0:
        return -1.0 * _bessel(1.0, r)
    below = _bessel(nu - 1.0, r)
    above = _bessel(nu + 1.0, r)
    return 0.5 * (below - above)


def _pochhammer(lam: float, n: int) -> float:
    value = 1.0
    for i in range(n):
        value *= lam + i
    return value


def _check_gegenbauer(n: int, lam: float, x) -> np.ndarray:
    if n < 0 or n > GEGENBAUER_MAX_DEGREE:
        raise DomainError(f"Gegenbauer degree must lie in [0, {GEGENBAUER_MAX_DEGREE}]")
    if lam <= 0:
        raise DomainError("Gegenbauer parameter lambda must be positive")
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("Gegenbauer polynomials are evaluated on [-1, 1]")
    return arr


def gegenbauer(n: int, lam: float, x):
    """C_n^lam(x) by the three-term recurrence in n."""
    arr = _check_gegenbauer(n, lam, x)
    prev = np.ones_like(arr)
    if n == 0:
        return float(prev) if arr.ndim == 0 else prev
    cur = 2.0 * lam * arr
    for j in range(2, n + 1):
        prev, cur = cur, (2.0 * arr * (j + lam - 1.0) * cur - (j + 2.0 * lam - 2.0) * prev) / j
    return float(cur) if arr.ndim == 0 else cur


def gegenbauer_explicit(n: int, lam: float, x):
    """The finite alternating sum; loses precision for large n, kept as a cross-check."""
    arr = _check_gegenbauer(n, lam, x)
    total = np.zeros_like(arr)
    for k in range(n // 2 + 1):
        coeff = (-1) ** k * _pochhammer(lam, n - k) / (math.factorial(k) * math.factorial(n - 2 * k))
        total = total + coeff * (2.0 * arr) ** (n - 2 * k)
    return float(total) if arr.ndim == 0 else total
