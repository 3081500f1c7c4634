"""Harmonic functions with small data on two lines and large interior values.

For a convergent pair (n, p) of (theta1 - theta2)/pi the function

    u(r, theta) = eps / sin(n delta) * Im((1 - 2 e^{-i n delta}) e^{i n (theta - theta2)}) r^n,

delta = theta1 - theta2, equals eps r^n on the ray theta1 and 2 eps r^n on
theta2, while sin(n delta) is of size pi |n x - p| <= pi/n, so the sup over
the unit disk grows at least like n eps / 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice

import numpy as np

from . import diophantine
from .errors import DomainError
from .series2d import DEFAULT_M_MAX, PolarSeries

N_MIN_FLOOR = 7
RADIAL_SAMPLES = 200
BOUNDARY_SAMPLES = 50
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class InstabilityWitness:
    n: int
    p: int
    u: PolarSeries
    eps: float
    theta1: float
    theta2: float
    achieved_sup: float
    boundary_error: float  # max relative error of u against eps r^n, 2 eps r^n on the rays

    @property
    def bound(self) -> float:
        return self.n * self.eps / 8

    @property
    def ratio(self) -> float:
        return self.achieved_sup / self.eps

    @property
    def meets_bound(self) -> bool:
        return self.achieved_sup >= self.bound

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "eps": self.eps,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "achieved_sup": self.achieved_sup,
            "bound": self.bound,
            "ratio": self.ratio,
            "boundary_error": self.boundary_error,
            "series": self.u.to_dict(),
        }


def witness_coefficients(theta1: float, theta2: float, n: int, eps: float) -> tuple[complex, complex]:
    """(c_n, c_{-n}) of the witness of order n."""
    delta = theta1 - theta2
    denom = 2j * math.sin(n * delta)
    c_plus = (1 - 2 * np.exp(-1j * n * delta)) / denom * np.exp(-1j * n * theta2) * eps
    c_minus = -(1 - 2 * np.exp(1j * n * delta)) / denom * np.exp(1j * n * theta2) * eps
    return complex(c_plus), complex(c_minus)


def closed_form(theta1: float, theta2: float, n: int, eps: float, r, theta):
    delta = theta1 - theta2
    w = (1 - 2 * np.exp(-1j * n * delta)) * np.exp(1j * n * (np.asarray(theta) - theta2))
    return eps / math.sin(n * delta) * np.imag(w) * np.asarray(r) ** n


def grid_sup(u: PolarSeries, n: int, theta2: float) -> float:
    """max |u| over 4n angles x 200 radii of the closed unit disk plus the angle n(theta - theta2) = pi/2."""
    radii = np.linspace(0.0, 1.0, RADIAL_SAMPLES)
    angles = np.concatenate([np.linspace(0, 2 * math.pi, 4 * n, endpoint=False), [theta2 + math.pi / (2 * n)]])
    R, T = np.meshgrid(radii, angles)
    return float(np.max(np.abs(u.evaluate(R, T))))


def _boundary_error(u: PolarSeries, theta1: float, theta2: float, n: int, eps: float) -> float:
    r = np.linspace(1.0 / BOUNDARY_SAMPLES, 1.0, BOUNDARY_SAMPLES)
    worst = 0.0
    for theta, target in ((theta1, eps), (theta2, 2 * eps)):
        want = target * r**n
        keep = want > 1e-290  # r**n underflows for large n at small r
        got = u.evaluate(r[keep], theta)
        worst = max(worst, float(np.max(np.abs(got - want[keep]) / want[keep])))
    return worst


def _check_angles(theta1: float, theta2: float, eps: float, n_min: int) -> float:
    if n_min < N_MIN_FLOOR:
        raise DomainError("n_min must exceed 6")
    if not eps > 0:
        raise DomainError("eps must be positive")
    return (theta1 - theta2) / math.pi


def _witness(theta1: float, theta2: float, eps: float, n: int, p: int) -> InstabilityWitness:
    c_plus, c_minus = witness_coefficients(theta1, theta2, n, eps)
    u = PolarSeries(0.0, {n: c_plus, -n: c_minus}, max(DEFAULT_M_MAX, n))
    err = _boundary_error(u, theta1, theta2, n, eps)
    return InstabilityWitness(n, p, u, eps, theta1, theta2, grid_sup(u, n, theta2), err)


def construct_witness(theta1: float, theta2: float, eps: float, n_min: int = N_MIN_FLOOR) -> InstabilityWitness:
    """Witness at the smallest convergent denominator n >= n_min of (theta1 - theta2)/pi."""
    x = _check_angles(theta1, theta2, eps, n_min)
    n, p = diophantine.dirichlet_pair(x, n_min)
    return _witness(theta1, theta2, eps, n, p)


def witnesses(theta1: float, theta2: float, eps: float, count: int, n_min: int = N_MIN_FLOOR) -> list[InstabilityWitness]:
    """Witnesses for the first ``count`` admissible convergent denominators."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    x = _check_angles(theta1, theta2, eps, n_min)
    if count == 0:
        return []
    pairs = list(islice(diophantine.dirichlet_pairs(x, n_min), count))
    if len(pairs) < count:
        raise diophantine.DepthError(f"only {len(pairs)} admissible denominators within depth")
    return [_witness(theta1, theta2, eps, n, p) for n, p in pairs]


def amplification_curve(theta1: float, theta2: float, eps: float, count: int,
                        n_min: int = N_MIN_FLOOR) -> list[tuple[int, float]]:
    """(n, achieved_sup / eps) for the first ``count`` witnesses."""
    return [(w.n, w.ratio) for w in witnesses(theta1, theta2, eps, count, n_min)]


def strictly_increasing(curve: list[tuple[int, float]]) -> bool:
    ratios = [ratio for _, ratio in curve]
    return all(b > a for a, b in zip(ratios, ratios[1:]))


def recovered_spectrum(w: InstabilityWitness, phi1: float, phi2: float, N: int | None = None) -> dict[int, complex]:
    """Modes of ``w.u`` recovered from Dirichlet traces on the rays phi1, phi2 (phi1 - phi2 irrational in pi)."""
    from .recovery2d import default_radii, make_trace, recover
    from .series2d import CurveSpec

    r = default_radii(1.0)
    t1 = make_trace(w.u, CurveSpec.ray(phi1), "dirichlet", r)
    t2 = make_trace(w.u, CurveSpec.ray(phi2), "dirichlet", r)
    res = recover(t1, t2, "laplace", w.n if N is None else N)
    if not res.complete:
        raise DomainError(f"recovery of the witness stopped: {res.status_label()}")
    return dict(res.recovered.modes)
