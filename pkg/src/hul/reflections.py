"""Orbits of the double reflection (R1 R2)^2 and their angular density.

R_j x = x - 2 <x, theta_j> theta_j reflects across the hyperplane with unit
normal theta_j. R1 R2 rotates the plane span(theta1, theta2) by twice the
angle between the normals and fixes its orthogonal complement, so the
orbit of (R1 R2)^2 is finite for eta in pi Q and dense on a circle otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

MAX_ITERATIONS = 10**7
DEFAULT_BINS = 720
UNIT_TOL = 1e-12
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class ReflectionPair:
    theta1: np.ndarray
    theta2: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.theta1, dtype=float).ravel()
        b = np.asarray(self.theta2, dtype=float).ravel()
        if a.shape != b.shape or a.size < 2:
            raise DomainError("normals must share a dimension d >= 2")
        for v in (a, b):
            if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
                raise DomainError("hyperplane normals must be unit vectors")
        if abs(abs(float(a @ b)) - 1.0) < UNIT_TOL:
            raise DomainError("normals must not be parallel")
        object.__setattr__(self, "theta1", a)
        object.__setattr__(self, "theta2", b)

    @classmethod
    def planar(cls, eta: float, d: int = 2) -> "ReflectionPair":
        """Normals e_1 and cos(eta) e_1 + sin(eta) e_2 in R^d."""
        a = np.zeros(d)
        b = np.zeros(d)
        a[0] = 1.0
        b[0], b[1] = math.cos(eta), math.sin(eta)
        return cls(a, b)

    @property
    def d(self) -> int:
        return self.theta1.size

    @property
    def eta(self) -> float:
        return math.acos(max(-1.0, min(1.0, float(self.theta1 @ self.theta2))))

    def plane_basis(self) -> tuple[np.ndarray, np.ndarray]:
        e2 = self.theta2 - (self.theta2 @ self.theta1) * self.theta1
        return self.theta1, e2 / np.linalg.norm(e2)


def reflect(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return x - 2.0 * float(x @ theta) * theta


def orbit(pair: ReflectionPair, x0, iterations: int) -> np.ndarray:
    """Rows ((R1 R2)^2)^k x0 for k = 0..iterations."""
    if not 0 <= iterations <= MAX_ITERATIONS:
        raise DomainError(f"iterations must lie in [0, {MAX_ITERATIONS:.0e}]")
    x = np.asarray(x0, dtype=float).ravel()
    if x.size != pair.d:
        raise DomainError("start point dimension differs from the normals")
    out = np.empty((iterations + 1, pair.d))
    out[0] = x
    # plain floats: the loop is sequential and numpy call overhead dominates for small d
    a, b = pair.theta1.tolist(), pair.theta2.tolist()
    xs = x.tolist()
    for k in range(iterations):
        for th in (b, a, b, a):  # R1 R2 R1 R2 x: R2 acts first
            s = 2.0 * sum(xi * ti for xi, ti in zip(xs, th))
            xs = [xi - s * ti for xi, ti in zip(xs, th)]
        out[k + 1] = xs
    return out


@dataclass(frozen=True)
class DensityReport:
    bins: int
    counts: np.ndarray
    fill_ratio: float
    distinct_angles: int
    dirichlet_sign: int  # product of the -1 factors along the orbit
    neumann_sign: int
    norm_drift: float
    orthogonal_drift: float
    degenerate_projection: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "counts": self.counts.tolist(),
            "fill_ratio": self.fill_ratio,
            "distinct_angles": self.distinct_angles,
            "dirichlet_sign": self.dirichlet_sign,
            "neumann_sign": self.neumann_sign,
            "norm_drift": self.norm_drift,
            "orthogonal_drift": self.orthogonal_drift,
            "degenerate_projection": self.degenerate_projection,
            "iterations": self.iterations,
        }


def orbit_angles(pair: ReflectionPair, points: np.ndarray) -> np.ndarray:
    e1, e2 = pair.plane_basis()
    return np.arctan2(points @ e2, points @ e1)


def count_distinct_angles(angles: np.ndarray, tol: float = 1e-7) -> int:
    """Number of clusters of angles on the circle, points within ``tol`` merged."""
    if len(angles) == 0:
        return 0
    a = np.sort(np.mod(angles, 2 * math.pi))
    gaps = np.diff(a) > tol
    clusters = 1 + int(np.count_nonzero(gaps))
    if clusters > 1 and (a[0] + 2 * math.pi - a[-1]) <= tol:
        clusters -= 1
    return clusters


def density_report(pair: ReflectionPair, x0, iterations: int, bins: int = DEFAULT_BINS,
                   points: np.ndarray | None = None) -> DensityReport:
    """Angular histogram of the orbit projected to span(theta1, theta2), with sign tracking."""
    if bins < 1:
        raise DomainError("bins must be positive")
    pts = orbit(pair, x0, iterations) if points is None else points
    x = pts[0]
    e1, e2 = pair.plane_basis()
    proj = np.column_stack([pts @ e1, pts @ e2])
    norm0 = float(np.linalg.norm(x))
    degenerate = bool(norm0 > 0 and np.hypot(*proj[0]) <= DEGENERATE_TOL * norm0)
    if degenerate:
        warnings.warn("start point is orthogonal to span(theta1, theta2); the orbit is a fixed point", stacklevel=2)
    if degenerate or norm0 == 0:
        counts = np.zeros(bins, dtype=int)
        distinct = 1
    else:
        ang = np.arctan2(proj[:, 1], proj[:, 0])
        idx = np.floor((ang + math.pi) / (2 * math.pi) * bins).astype(int) % bins
        counts = np.bincount(idx, minlength=bins)
        distinct = count_distinct_angles(ang)
    rest = pts - np.outer(proj[:, 0], e1) - np.outer(proj[:, 1], e2)
    # u(R_j x) = -u(x) for Dirichlet data: four factors of -1 per step
    dirichlet = 1
    for _ in range(iterations):
        dirichlet *= sign_product(4)
    return DensityReport(
        bins=bins,
        counts=counts,
        fill_ratio=float(np.count_nonzero(counts)) / bins,
        distinct_angles=distinct,
        dirichlet_sign=dirichlet,
        neumann_sign=1,
        norm_drift=float(np.max(np.abs(np.linalg.norm(pts, axis=1) - norm0))),
        orthogonal_drift=float(np.max(np.abs(rest - rest[0]))),
        degenerate_projection=degenerate,
        iterations=iterations,
    )


def sign_product(reflections: int, dirichlet: bool = True) -> int:
    """Sign picked up by u after a composition of ``reflections`` reflections."""
    return (-1) ** reflections if dirichlet else 1
