"""Angular Fourier series for 2-D Laplace and Helmholtz solutions.

A ``PolarSeries`` stores u(r, theta) = sum_m c_m phi_|m|(r) e^{i m theta}
with phi_m(r) = r**m when k = 0 and J_m(k r) when k > 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from . import specfun
from .errors import DomainError, RangeError

DEFAULT_M_MAX = 64
FD_STEP = 1e-3


def _freeze_modes(modes: Mapping[int, complex]) -> dict[int, complex]:
    out = {}
    for m, c in modes.items():
        if int(m) != m:
            raise DomainError(f"mode index {m!r} is not an integer")
        c = complex(c)
        if c != 0:
            out[int(m)] = c
    return dict(sorted(out.items()))


class RadialProfile:
    """phi_n(r) with phi_n(r) ~ a_n r**n at 0, plus the two derivative forms used on curves."""

    def value(self, n: int, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, n: int, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def over_r(self, n: int, r: np.ndarray) -> np.ndarray:
        """n phi_n(r) / r."""
        raise NotImplementedError


class LaplaceProfile(RadialProfile):
    def value(self, n, r):
        return r**n

    def derivative(self, n, r):
        return n * r ** (n - 1) if n > 0 else np.zeros_like(r)

    def over_r(self, n, r):
        return self.derivative(n, r)


@dataclass(frozen=True)
class HelmholtzProfile(RadialProfile):
    k: float

    def value(self, n, r):
        return np.asarray(specfun.bessel_j(n, self.k * r))

    def derivative(self, n, r):
        return self.k * np.asarray(specfun.bessel_j_derivative(n, self.k * r))

    def over_r(self, n, r):
        # m J_m(x)/x = (J_{m+1}(x) + J_{m-1}(x))/2 avoids dividing by r
        if n == 0:
            return np.zeros_like(r)
        kr = self.k * r
        return 0.5 * self.k * (np.asarray(specfun.bessel_j(n + 1, kr)) + np.asarray(specfun.bessel_j(n - 1, kr)))


@dataclass(frozen=True)
class PolarSeries:
    k: float
    modes: dict[int, complex] = field(default_factory=dict)
    m_max: int = DEFAULT_M_MAX
    # Radial profile override (e.g. an ODE profile); defaults to r**n or J_n(k r).
    profile: "RadialProfile | None" = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.k < 0 or not math.isfinite(self.k):
            raise DomainError("wavenumber k must be finite and nonnegative")
        frozen = _freeze_modes(self.modes)
        if frozen and max(abs(m) for m in frozen) > self.m_max:
            raise DomainError(f"mode index exceeds m_max = {self.m_max}")
        object.__setattr__(self, "modes", frozen)

    # -- algebra ---------------------------------------------------------
    def _combine(self, other: "PolarSeries", a: complex, b: complex) -> "PolarSeries":
        if self.k != other.k:
            raise DomainError("cannot combine series with different wavenumbers")
        modes = {m: a * c for m, c in self.modes.items()}
        for m, c in other.modes.items():
            modes[m] = modes.get(m, 0) + b * c
        return PolarSeries(self.k, modes, max(self.m_max, other.m_max), self.profile)

    def __add__(self, other):
        return self._combine(other, 1, 1)

    def __sub__(self, other):
        return self._combine(other, 1, -1)

    def __mul__(self, a):
        return PolarSeries(self.k, {m: a * c for m, c in self.modes.items()}, self.m_max, self.profile)

    __rmul__ = __mul__

    def coefficient(self, m: int) -> complex:
        return self.modes.get(m, 0j)

    def truncated(self, n_max: int) -> "PolarSeries":
        kept = {m: c for m, c in self.modes.items() if abs(m) <= n_max}
        return PolarSeries(self.k, kept, self.m_max, self.profile)

    def is_real(self, tol: float = 1e-12) -> bool:
        """Whether c_{-m} = conj(c_m) for every stored mode."""
        scale = max([abs(c) for c in self.modes.values()], default=0.0)
        return all(abs(self.coefficient(-m) - np.conj(c)) <= tol * max(scale, 1.0) for m, c in self.modes.items())

    # -- radial profiles -------------------------------------------------
    @property
    def radial_profile(self) -> "RadialProfile":
        if self.profile is not None:
            return self.profile
        return LaplaceProfile() if self.k == 0.0 else HelmholtzProfile(self.k)

    def radial(self, n: int, r) -> np.ndarray:
        return self.radial_profile.value(abs(n), np.asarray(r, dtype=float))

    def radial_derivative_profile(self, n: int, r) -> np.ndarray:
        return self.radial_profile.derivative(abs(n), np.asarray(r, dtype=float))

    def radial_over_r(self, n: int, r) -> np.ndarray:
        """n phi_n(r) / r, regular at r = 0."""
        return self.radial_profile.over_r(abs(n), np.asarray(r, dtype=float))

    # -- evaluation ------------------------------------------------------
    def _sum(self, radial: Callable, r, theta, weight: Callable) -> complex | np.ndarray:
        r_arr, th_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        total = np.zeros(r_arr.shape, dtype=complex)
        for m, c in self.modes.items():
            total = total + c * weight(m) * radial(m, r_arr) * np.exp(1j * m * th_arr)
        return complex(total) if total.ndim == 0 else total

    def evaluate(self, r, theta):
        return self._sum(self.radial, r, theta, lambda m: 1.0)

    def radial_derivative(self, r, theta):
        """d u / d r."""
        return self._sum(self.radial_derivative_profile, r, theta, lambda m: 1.0)

    def angular_derivative(self, r, theta):
        """(1/r) d u / d theta, computed without dividing by r."""
        return self._sum(self.radial_over_r, r, theta, lambda m: 1j * np.sign(m))

    def theta_derivative(self, r, theta):
        """d u / d theta (unscaled)."""
        return self._sum(self.radial, r, theta, lambda m: 1j * m)

    def evaluate_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.evaluate(np.hypot(x, y), np.arctan2(y, x))

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {"k": self.k, "modes": [[m, c.real, c.imag] for m, c in self.modes.items()]}

    @classmethod
    def from_dict(cls, doc: Mapping, m_max: int | None = None) -> "PolarSeries":
        modes: dict[int, complex] = {}
        for entry in doc["modes"]:
            m, re, im = entry
            modes[int(m)] = modes.get(int(m), 0) + complex(re, im)
        top = max([abs(m) for m in modes], default=0)
        return cls(float(doc["k"]), modes, m_max or max(DEFAULT_M_MAX, top))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class CurveSpec:
    """Curve (r cos theta(r), r sin theta(r)) through the origin, 0 < r < r_max."""

    theta_poly: tuple[float, ...]  # ascending coefficients: theta0 + theta1 r + ...
    r_max: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.theta_poly) or (0.0,)
        object.__setattr__(self, "theta_poly", coeffs)
        if not self.r_max > 0:
            raise DomainError("curve range must be (0, r_max) with r_max > 0")

    @classmethod
    def ray(cls, theta0: float, r_max: float = 1.0) -> "CurveSpec":
        return cls((theta0,), r_max)

    @property
    def theta0(self) -> float:
        return self.theta_poly[0]

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max):
            raise RangeError(f"radius outside the curve range (0, {self.r_max})")
        return r

    def theta(self, r):
        r = self._check(r)
        return np.polynomial.polynomial.polyval(r, self.theta_poly)

    def theta_prime(self, r):
        r = self._check(r)
        return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(self.theta_poly))

    def point(self, r):
        th = self.theta(r)
        return np.asarray(r) * np.cos(th), np.asarray(r) * np.sin(th)


def tangential_normal(s: PolarSeries, curve: CurveSpec, r):
    """(d_t u, d_n u) along the curve.

    d_t = d_r u + theta' d_theta u and d_n = -r theta' d_r u + (1/r) d_theta u,
    the derivatives along the (unnormalized) tangent e_r + r theta' e_theta
    and normal -r theta' e_r + e_theta.
    """
    r = np.asarray(r, dtype=float)
    th = curve.theta(r)
    thp = curve.theta_prime(r)
    ur = s.radial_derivative(r, th)
    ang = s.angular_derivative(r, th)  # (1/r) d_theta u
    dt = ur + r * thp * ang
    dn = -r * thp * ur + ang
    return dt, dn


def helmholtz_residual(s: PolarSeries, points: Iterable, h: float = FD_STEP) -> float:
    """max |Delta_h u + k^2 u| over the given (x, y) points, 5-point stencil with step h."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    centre = s.evaluate_xy(x, y)
    lap = (
        s.evaluate_xy(x + h, y)
        + s.evaluate_xy(x - h, y)
        + s.evaluate_xy(x, y + h)
        + s.evaluate_xy(x, y - h)
        - 4.0 * centre
    ) / (h * h)
    return float(np.max(np.abs(lap + s.k**2 * centre)))


def disk_grid(radius: float, n_r: int = 8, n_theta: int = 16, r_min: float | None = None) -> np.ndarray:
    """Polar grid of (x, y) points in a disk, kept at least 2 FD steps from the origin."""
    r_min = 2 * FD_STEP if r_min is None else r_min
    rs = np.linspace(r_min, radius, n_r)
    ts = np.linspace(0, 2 * math.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(rs, ts)
    return np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])


def field_samples(s: PolarSeries, points: np.ndarray) -> np.ndarray:
    """Rows (x, y, re u, im u) for CSV output."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    u = s.evaluate_xy(pts[:, 0], pts[:, 1])
    u = np.atleast_1d(u)
    return np.column_stack([pts[:, 0], pts[:, 1], u.real, u.imag])
