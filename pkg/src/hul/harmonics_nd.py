"""Spherical harmonics in d >= 3 and the constructions built on them.

Coordinates follow x_1 = r sin t_{d-2} ... sin t_1 cos phi,
x_2 = r sin t_{d-2} ... sin t_1 sin phi, x_k = r sin t_{d-2} ... sin t_{k-1}
cos t_{k-2} for 3 <= k <= d. For alpha = (a_1, ..., a_{d-2}, m) the basis
element is

    Y_alpha = r^|alpha| e^{i m phi} prod_{j=1}^{d-2} sin(t_{d-1-j})^{|alpha|^{j+1}} C^{lam_j}_{a_j}(cos t_{d-1-j})

with |alpha|^j = a_j + ... + a_{d-2} + |m| and lam_j = |alpha|^{j+1} + (d-j-1)/2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import specfun
from .errors import DegreeTooSmallError, DomainError, GridError, InconsistentTraceError, ResolutionError

RANK_TOL = 1e-10
VANISH_TOL = 1e-10
GRAM_COND_MAX = 1e6
DET_TOL = 1e-8
NOISE_TOL = 1e-4
CONSISTENCY_TOL = 1e-6
QUAD_THETA = 64
QUAD_PHI = 128
QUAD_TOL = 1e-8
MEASURE_RADII = (0.5, 1.0, 2.0, 4.0)

COMPLETE = "complete"
ABORTED_SMALL_DENOMINATOR = "aborted-small-denominator"
ABORTED_NOISE = "aborted-noise"


# -- coordinates --------------------------------------------------------------

def spherical_to_cartesian(d: int, r, theta, phi) -> np.ndarray:
    """Points of R^d from (r, theta_1..theta_{d-2}, phi); ``theta`` has trailing axis d-2."""
    if d < 3:
        raise DomainError("spherical coordinates here need d >= 3")
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if theta.shape[-1:] != (d - 2,):
        raise DomainError(f"theta must have trailing length {d - 2}")
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    shape = np.broadcast_shapes(r.shape, theta.shape[:-1], phi.shape)
    x = np.empty(shape + (d,))
    full = np.prod(sin_t, axis=-1)  # sin t_1 ... sin t_{d-2}
    x[..., 0] = r * full * np.cos(phi)
    x[..., 1] = r * full * np.sin(phi)
    for k in range(3, d + 1):
        tail = np.prod(sin_t[..., k - 2:], axis=-1)  # sin t_{k-1} ... sin t_{d-2}
        x[..., k - 1] = r * tail * cos_t[..., k - 3]
    return x


@dataclass(frozen=True)
class SphericalPoint:
    r: float
    theta: tuple[float, ...]
    phi: float
    degenerate: bool


def cartesian_to_spherical(x) -> SphericalPoint:
    """Inverse map; at coordinate singularities the remaining angles are set to 0 and flagged."""
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    if d < 3:
        raise DomainError("spherical coordinates here need d >= 3")
    r = float(np.linalg.norm(x))
    theta = [0.0] * (d - 2)
    if r == 0:
        return SphericalPoint(0.0, tuple(theta), 0.0, True)
    rho = r
    # t_{d-2} from x_d, then t_{d-3} from x_{d-1}, ..., t_1 from x_3
    for k in range(d, 2, -1):
        if rho <= 1e-300:
            return SphericalPoint(r, tuple(theta), 0.0, True)
        c = max(-1.0, min(1.0, x[k - 1] / rho))
        theta[k - 3] = math.acos(c)
        rho = float(np.hypot(x[0], x[1])) if k == 3 else float(np.linalg.norm(x[: k - 1]))
    if rho <= 1e-15 * r:
        return SphericalPoint(r, tuple(theta), 0.0, True)
    phi = math.atan2(x[1], x[0]) % (2 * math.pi)
    return SphericalPoint(r, tuple(theta), phi, False)


# -- indices and basis ------------------------------------------------------------

@dataclass(frozen=True, order=True)
class HarmonicIndex:
    alpha: tuple[int, ...]  # (a_1, ..., a_{d-2}, m)

    def __post_init__(self):
        a = tuple(int(v) for v in self.alpha)
        if len(a) < 2 or any(v < 0 for v in a[:-1]):
            raise DomainError("index needs a_1..a_{d-2} >= 0 and an integer m")
        object.__setattr__(self, "alpha", a)

    @property
    def d(self) -> int:
        return len(self.alpha) + 1

    @property
    def beta(self) -> tuple[int, ...]:
        return self.alpha[:-1]

    @property
    def m(self) -> int:
        return self.alpha[-1]

    def tail(self, j: int) -> int:
        """|alpha|^j = a_j + ... + a_{d-2} + |m| (1-based j, up to d-1)."""
        return sum(self.alpha[j - 1:-1]) + abs(self.m)

    @property
    def degree(self) -> int:
        return self.tail(1)

    def lam(self, j: int) -> float:
        return self.tail(j + 1) + (self.d - j - 1) / 2

    def to_list(self) -> list[int]:
        return list(self.alpha)


def _m_key(m: int) -> int:
    return 2 * abs(m) - (1 if m > 0 else 0)  # 0, 1, -1, 2, -2, ...


def basis_indices(d: int, n: int) -> list[HarmonicIndex]:
    """Indices of degree n, lexicographic in (a_1, ..., a_{d-2}, m) with m ordered 0, 1, -1, 2, -2, ..."""
    if d < 3 or n < 0:
        raise DomainError("need d >= 3 and n >= 0")
    out = []
    for beta in itertools.product(range(n + 1), repeat=d - 2):
        rest = n - sum(beta)
        if rest < 0:
            continue
        for m in ([0] if rest == 0 else [rest, -rest]):
            out.append(HarmonicIndex(beta + (m,)))
    out.sort(key=lambda idx: idx.beta + (_m_key(idx.m),))
    return out


def dim_harmonics(d: int, m: int) -> int:
    """dim of degree-m spherical harmonics in R^d: C(m+d-1, d-1) - C(m+d-3, d-1)."""
    if d < 2 or m < 0:
        raise DomainError("need d >= 2 and m >= 0")
    lower = math.comb(m + d - 3, d - 1) if m + d - 3 >= d - 1 else 0
    return math.comb(m + d - 1, d - 1) - lower


def angular_part(idx: HarmonicIndex, theta) -> np.ndarray:
    """The r- and phi-free factor Y~_alpha(theta); ``theta`` has trailing axis d-2."""
    theta = np.asarray(theta, dtype=float)
    d = idx.d
    out = np.ones(theta.shape[:-1])
    for j in range(1, d - 1):
        t = theta[..., d - 2 - j]  # t_{d-1-j}
        power = idx.tail(j + 1)
        c = np.clip(np.cos(t), -1.0, 1.0)
        out = out * np.sin(t) ** power * specfun.gegenbauer(idx.alpha[j - 1], idx.lam(j), c)
    return out


def evaluate_Y(idx: HarmonicIndex, r, theta, phi) -> np.ndarray:
    """r^|alpha| e^{i m phi} Y~_alpha(theta)."""
    return np.asarray(r, dtype=float) ** idx.degree * np.exp(1j * idx.m * np.asarray(phi)) * angular_part(idx, theta)


def evaluate_Y_cartesian(idx: HarmonicIndex, x) -> np.ndarray:
    """The homogeneous harmonic polynomial r^|alpha| Y~ e^{i m phi} at points x (trailing axis d)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    flat = x.reshape(-1, idx.d)
    pts = [cartesian_to_spherical(p) for p in flat]
    r = np.array([p.r for p in pts])
    th = np.array([p.theta for p in pts])
    ph = np.array([p.phi for p in pts])
    return evaluate_Y(idx, r, th, ph).reshape(x.shape[:-1])


def fd_laplacian(f, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """(2d+1)-point finite-difference Laplacian of f at points x (rows)."""
    x = np.atleast_2d(x)
    d = x.shape[1]
    centre = f(x)
    total = -2.0 * d * centre
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        total = total + f(x + e) + f(x - e)
    return total / (h * h)


# -- radial profiles and series ---------------------------------------------------

def radial_factor(d: int, k: float, n: int, r) -> np.ndarray:
    """r^n for k = 0, else r^{-(d-2)/2} J_{n+(d-2)/2}(k r) (regular at 0)."""
    r = np.asarray(r, dtype=float)
    if k == 0:
        return r**n
    nu = n + (d - 2) / 2
    out = np.empty_like(r)
    pos = r > 0
    out[pos] = r[pos] ** (-(d - 2) / 2) * specfun.bessel_j(nu, k * r[pos])
    out[~pos] = specfun.leading_coefficient((d - 2) / 2) * k ** ((d - 2) / 2) if n == 0 else 0.0
    return out


@dataclass(frozen=True)
class NDSeries:
    d: int
    k: float
    terms: dict[tuple[int, ...], complex] = field(default_factory=dict)  # alpha -> c_alpha

    def __post_init__(self):
        if self.d < 3:
            raise DomainError("NDSeries needs d >= 3")
        if self.k < 0:
            raise DomainError("k must be nonnegative")
        clean = {}
        for a, c in self.terms.items():
            idx = HarmonicIndex(tuple(a))
            if idx.d != self.d:
                raise DomainError(f"index {a} does not belong to dimension {self.d}")
            if complex(c) != 0:
                clean[idx.alpha] = complex(c)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def coefficient(self, alpha) -> complex:
        return self.terms.get(tuple(alpha), 0j)

    @property
    def degree(self) -> int:
        return max((HarmonicIndex(a).degree for a in self.terms), default=0)

    def block(self, n: int) -> "NDSeries":
        return NDSeries(self.d, self.k, {a: c for a, c in self.terms.items() if HarmonicIndex(a).degree == n})

    def evaluate(self, r, theta, phi) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        shape = np.broadcast_shapes(r.shape, theta.shape[:-1], phi.shape)
        total = np.zeros(shape, dtype=complex)
        for a, c in self.terms.items():
            idx = HarmonicIndex(a)
            total = total + c * radial_factor(self.d, self.k, idx.degree, r) * np.exp(1j * idx.m * phi) * angular_part(idx, theta)
        return total

    def evaluate_cartesian(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pts = [cartesian_to_spherical(p) for p in x.reshape(-1, self.d)]
        r = np.array([p.r for p in pts])
        th = np.array([p.theta for p in pts])
        ph = np.array([p.phi for p in pts])
        return self.evaluate(r, th, ph).reshape(x.shape[:-1])

    def to_dict(self) -> dict:
        return {"d": self.d, "k": self.k, "terms": [[list(a), c.real, c.imag] for a, c in self.terms.items()]}

    @classmethod
    def from_dict(cls, doc) -> "NDSeries":
        terms: dict[tuple[int, ...], complex] = {}
        for a, re, im in doc["terms"]:
            terms[tuple(a)] = terms.get(tuple(a), 0) + complex(re, im)
        return cls(int(doc["d"]), float(doc["k"]), terms)


# -- hypersurfaces and traces --------------------------------------------------------

def theta_grid(d: int, per_axis: int = 16) -> np.ndarray:
    """Tensor grid of interior angles, rows (theta_1, ..., theta_{d-2}), Gauss-Legendre in cos."""
    x, _ = np.polynomial.legendre.leggauss(per_axis)
    t = np.arccos(x[::-1])
    mesh = np.meshgrid(*([t] * (d - 2)), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class HypersurfaceSpec:
    """Azimuth graph phi = psi(r, theta) = sum_k coeffs[k, i] r^k at the grid angles theta_i."""

    theta: np.ndarray  # (n_theta, d-2)
    coeffs: np.ndarray  # (degree + 1, n_theta)

    def __post_init__(self):
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        co = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if co.shape[1] != th.shape[0]:
            raise DomainError("coefficient columns must match the theta grid")
        if np.ptp(co[0]) > 1e-12:
            raise DomainError("psi(0, theta) must not depend on theta")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "coeffs", co)

    @classmethod
    def from_function(cls, theta: np.ndarray, coeff_funcs) -> "HypersurfaceSpec":
        """coeff_funcs[k](theta_rows) gives the r^k coefficient on the grid."""
        theta = np.atleast_2d(theta)
        co = np.array([np.broadcast_to(np.asarray(f(theta), dtype=float), (theta.shape[0],)) for f in coeff_funcs])
        return cls(theta, co)

    @classmethod
    def affine(cls, theta: np.ndarray, phi0: float, slope: float = 0.0) -> "HypersurfaceSpec":
        n = np.atleast_2d(theta).shape[0]
        return cls(theta, np.vstack([np.full(n, phi0), np.full(n, slope)]))

    @property
    def d(self) -> int:
        return self.theta.shape[1] + 2

    @property
    def phi0(self) -> float:
        return float(self.coeffs[0, 0])

    def psi(self, r) -> np.ndarray:
        """psi on the (r, theta) tensor grid, shape (n_r, n_theta)."""
        r = np.asarray(r, dtype=float)
        powers = r[:, None] ** np.arange(self.coeffs.shape[0])[None, :]
        return powers @ self.coeffs


@dataclass(frozen=True)
class NDTrace:
    surface: HypersurfaceSpec
    r: np.ndarray
    values: np.ndarray  # (n_r, n_theta)

    def with_values(self, values) -> "NDTrace":
        return NDTrace(self.surface, self.r, values)


def make_nd_trace(s: NDSeries, surface: HypersurfaceSpec, r) -> NDTrace:
    r = np.sort(np.asarray(r, dtype=float))[::-1]
    psi = surface.psi(r)
    R = np.broadcast_to(r[:, None], psi.shape)
    th = np.broadcast_to(surface.theta[None, :, :], psi.shape + (surface.d - 2,))
    return NDTrace(surface, r, s.evaluate(R, th, psi))


def _forward(idx: HarmonicIndex, k: float, tr: NDTrace) -> np.ndarray:
    psi = tr.surface.psi(tr.r)
    rad = radial_factor(idx.d, k, idx.degree, tr.r)[:, None]
    return (rad * np.exp(1j * idx.m * psi) * angular_part(idx, tr.surface.theta)[None, :]).ravel()


# -- recovery -------------------------------------------------------------------------

def gram_condition(d: int, n: int, theta: np.ndarray) -> float:
    """Condition number of the column-scaled Gram matrix of {Y~_{beta,m}: |beta| + m = n, m >= 0}."""
    a = _angular_matrix(d, n, theta)[0]
    g = a.T @ a
    scale = np.sqrt(np.diag(g))
    return float(np.linalg.cond(g / np.outer(scale, scale)))


def _angular_matrix(d: int, n: int, theta: np.ndarray):
    keys = [idx for idx in basis_indices(d, n) if idx.m >= 0]
    cols = np.column_stack([angular_part(idx, theta) for idx in keys])
    return cols, keys


@dataclass(frozen=True)
class NDDiagnostic:
    n: int
    m: int
    det_modulus: float
    residual: float


@dataclass(frozen=True)
class NDRecoveryResult:
    recovered: NDSeries
    diagnostics: list[NDDiagnostic]
    status: str
    aborted_at: tuple[int, int] | None = None  # (m, n)
    gram_conditions: dict[int, float] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    def status_label(self) -> str:
        if self.aborted_at is None:
            return self.status
        m, n = self.aborted_at
        return f"{self.status}(m={m}, n={n})"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "aborted_at": None if self.aborted_at is None else {"m": self.aborted_at[0], "n": self.aborted_at[1]},
            "series": self.recovered.to_dict(),
            "diagnostics": [d.__dict__ for d in self.diagnostics],
            "gram_conditions": {str(n): c for n, c in self.gram_conditions.items()},
        }


def recover_nd(
    trace1: NDTrace,
    trace2: NDTrace,
    k: float = 0.0,
    N: int = 3,
    det_tol: float = DET_TOL,
    noise_tol: float = NOISE_TOL,
    consistency_tol: float = CONSISTENCY_TOL,
) -> NDRecoveryResult:
    """Recover c_alpha for |alpha| <= N from Dirichlet traces on two azimuth graphs.

    At order n the deflated traces are fitted jointly by the exact traces of
    the basis elements of degree n..N. The order-n angular limit on each
    surface, sum c_{beta,m} Y~_{beta,|m|}(theta) e^{i m phi_j}, is projected
    onto the independent set {Y~_{beta,m}} on the theta grid and the 2x2
    systems in (c_{beta,-m}, c_{beta,m}) with determinant 2i sin m(phi_2 - phi_1)
    are solved.
    """
    s1, s2 = trace1.surface, trace2.surface
    d = s1.d
    if s2.d != d or not np.array_equal(s1.theta, s2.theta):
        raise DomainError("both traces must share the theta grid")
    phis = (s1.phi0, s2.phi0)
    traces = [trace1, trace2]
    reference = float(np.linalg.norm(np.concatenate([t.values.ravel() for t in traces])))
    terms: dict[tuple[int, ...], complex] = {}
    diagnostics: list[NDDiagnostic] = []
    grams: dict[int, float] = {}

    def result(status, at=None):
        return NDRecoveryResult(NDSeries(d, k, terms), diagnostics, status, at, grams)

    for n in range(N + 1):
        ang, keys = _angular_matrix(d, n, s1.theta)
        grams[n] = gram_condition(d, n, s1.theta)
        if grams[n] >= GRAM_COND_MAX:
            raise GridError(f"Gram matrix of degree-{n} angular basis has condition {grams[n]:.3g}")
        # determinant certificates first: they do not depend on the data
        for idx in keys:
            if idx.m == 0:
                continue
            det = 2j * math.sin(idx.m * (phis[1] - phis[0]))
            if abs(det) < det_tol * 2.0:
                diagnostics.append(NDDiagnostic(n, idx.m, abs(det), float("nan")))
                return result(ABORTED_SMALL_DENOMINATOR, (idx.m, n))

        cols_idx = [idx for deg in range(n, N + 1) for idx in basis_indices(d, deg)]
        a = np.vstack([np.column_stack([_forward(idx, k, tr) for idx in cols_idx]) for tr in traces])
        b = np.concatenate([tr.values.ravel() for tr in traces])
        norms = np.linalg.norm(a, axis=0)
        norms[norms == 0] = 1.0
        x, *_ = np.linalg.lstsq(a / norms, b, rcond=None)
        x = x / norms
        fit_resid = float(np.linalg.norm(a @ x - b)) / reference if reference else 0.0
        if fit_resid > noise_tol:
            diagnostics.append(NDDiagnostic(n, -1, float("nan"), fit_resid))
            return result(ABORTED_NOISE, (-1, n))
        amp = {idx.alpha: x[i] for i, idx in enumerate(cols_idx) if idx.degree == n}

        # angular limit on each surface, projected onto Y~_{beta,m}, m >= 0
        proj = []
        for phi in phis:
            limit = np.zeros(len(s1.theta), dtype=complex)
            for alpha, c in amp.items():
                idx = HarmonicIndex(alpha)
                limit += c * np.exp(1j * idx.m * phi) * angular_part(idx, s1.theta)
            coef, *_ = np.linalg.lstsq(ang, limit, rcond=None)
            proj.append(dict(zip([kk.alpha for kk in keys], coef)))

        new: dict[tuple[int, ...], complex] = {}
        for idx in keys:
            l1, l2 = proj[0][idx.alpha], proj[1][idx.alpha]
            if idx.m == 0:
                gap = abs(l1 - l2)
                if gap > consistency_tol * max(1.0, abs(l1), abs(l2)):
                    raise InconsistentTraceError(f"degree {n}, m = 0 limits disagree by {gap:.3g}", n)
                new[idx.alpha] = 0.5 * (l1 + l2)
                diagnostics.append(NDDiagnostic(n, 0, 1.0, gap))
                continue
            m = idx.m
            mat = np.array([[np.exp(-1j * m * phis[0]), np.exp(1j * m * phis[0])],
                            [np.exp(-1j * m * phis[1]), np.exp(1j * m * phis[1])]])
            sol = np.linalg.solve(mat, np.array([l1, l2]))
            resid = float(np.max(np.abs(mat @ sol - np.array([l1, l2]))))
            diagnostics.append(NDDiagnostic(n, m, abs(np.linalg.det(mat)), resid))
            new[idx.beta + (-m,)] = complex(sol[0])
            new[idx.alpha] = complex(sol[1])
        terms.update({a_: c for a_, c in new.items() if c != 0})
        part = NDSeries(d, k, new)
        for j, tr in enumerate(traces):
            traces[j] = tr.with_values(tr.values - make_nd_trace(part, tr.surface, tr.r).values)
    return result(COMPLETE)


# -- null-space counterexamples ---------------------------------------------------------

def rref(a: np.ndarray, tol: float | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with partial pivoting; rank tolerance 1e-10 * max row norm."""
    a = np.array(a, dtype=complex)
    rows, cols = a.shape
    if tol is None:
        tol = RANK_TOL * max(float(np.max(np.linalg.norm(a, axis=1))), 1e-300) if rows else 0.0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) <= tol:
            a[r:, c] = 0
            continue
        a[[r, p]] = a[[p, r]]
        a[r] = a[r] / a[r, c]
        for i in range(rows):
            if i != r and a[i, c] != 0:
                a[i] = a[i] - a[i, c] * a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def nullspace(a: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Columns spanning the numerical null space, one per free column of the RREF."""
    red, pivots = rref(a, tol)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=complex)
    for j, f in enumerate(free):
        basis[f, j] = 1.0
        for i, p in enumerate(pivots):
            basis[p, j] = -red[i, f]
    return basis


def minimal_degree(d: int, n_lines: int) -> int:
    """Smallest m with dim H_m > 2 N, the degree the dimension count guarantees."""
    m = 0
    while dim_harmonics(d, m) <= 2 * n_lines:
        m += 1
    return m


def _direction_angles(v: np.ndarray) -> tuple[float, tuple[float, ...], float]:
    p = cartesian_to_spherical(v)
    return p.r, p.theta, p.phi


def _sphere_grid(d: int, n_theta: int = 96, n_phi: int = 192):
    if d != 3:
        t = theta_grid(d, 12)
        ph = np.linspace(0, 2 * math.pi, 48, endpoint=False)
        th = np.repeat(t, len(ph), axis=0)
        return th, np.tile(ph, len(t))
    t = np.linspace(0, math.pi, n_theta)
    ph = np.linspace(0, 2 * math.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(t, ph, indexing="ij")
    return T.reshape(-1, 1), P.ravel()


@dataclass(frozen=True)
class NullspaceHarmonic:
    d: int
    m: int
    lines: np.ndarray  # (N, d) unit vectors
    coefficients: dict[tuple[int, ...], complex]
    null_dim: int
    rank: int
    dim: int
    vanishing: float  # max |Y(+-theta_j)| after normalization
    sup_norm: float  # sup_S |Y| used for the normalization (grid estimate)

    @property
    def indices(self) -> list[HarmonicIndex]:
        return [HarmonicIndex(a) for a in self.coefficients]

    def evaluate(self, theta, phi) -> np.ndarray:
        return NDSeries(self.d, 0.0, self.coefficients).evaluate(1.0, theta, phi)

    def evaluate_direction(self, v) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        return NDSeries(self.d, 0.0, self.coefficients).evaluate_cartesian(v / np.linalg.norm(v, axis=1)[:, None])

    def extension(self, k: float = 0.0) -> NDSeries:
        """u(r theta) = r^m Y(theta) or r^{-(d-2)/2} J_{m+(d-2)/2}(k r) Y(theta)."""
        return NDSeries(self.d, k, self.coefficients)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c - np.conj(self.coefficients.get(a[:-1] + (-a[-1],), 0))) <= tol
                   for a, c in self.coefficients.items())

    def real_part(self) -> "NullspaceHarmonic":
        """Re Y (or Im Y if Re Y vanishes), again in the null space and renormalized."""
        conj = {a[:-1] + (-a[-1],): np.conj(c) for a, c in self.coefficients.items()}
        keys = set(self.coefficients) | set(conj)
        re = {a: 0.5 * (self.coefficients.get(a, 0) + conj.get(a, 0)) for a in keys}
        im = {a: -0.5j * (self.coefficients.get(a, 0) - conj.get(a, 0)) for a in keys}
        for cand in (re, im):
            cand = {a: c for a, c in cand.items() if abs(c) > 1e-15}
            if cand:
                sup = _sup_norm(self.d, cand)
                if sup > 1e-8:
                    scaled = {a: c / sup for a, c in sorted(cand.items())}
                    vanish = _vanishing(self.d, scaled, self.lines)
                    return NullspaceHarmonic(self.d, self.m, self.lines, scaled, self.null_dim, self.rank,
                                             self.dim, vanish, 1.0)
        raise DegreeTooSmallError("null-space harmonic has no nonzero real part")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "lines": self.lines.tolist(),
            "coefficients": [[list(a), c.real, c.imag] for a, c in self.coefficients.items()],
            "null_dim": self.null_dim,
            "rank": self.rank,
            "dim": self.dim,
            "vanishing": self.vanishing,
        }


def _sup_norm(d: int, coeffs: dict) -> float:
    th, ph = _sphere_grid(d)
    s = NDSeries(d, 0.0, coeffs)
    vals = np.abs(s.evaluate(1.0, th, ph))
    best = float(np.max(vals))
    if d != 3:
        return best
    # polish the grid maximum; the sup norm enters the densities 1 +- Y/|Y|
    i = int(np.argmax(vals))

    def neg(p):
        return -float(np.abs(s.evaluate(1.0, np.array([p[0]]), p[1])))

    res = optimize.minimize(neg, [th[i, 0], ph[i]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    return max(best, -float(res.fun))


def _vanishing(d: int, coeffs: dict, lines: np.ndarray) -> float:
    s = NDSeries(d, 0.0, coeffs)
    pts = np.vstack([lines, -lines])
    return float(np.max(np.abs(s.evaluate_cartesian(pts))))


def nullspace_harmonic(d: int, lines, m: int) -> NullspaceHarmonic:
    """A degree-m harmonic vanishing at +-theta_j, normalized to unit sup norm on the sphere."""
    lines = np.atleast_2d(np.asarray(lines, dtype=float))
    if d < 3 or lines.shape[1] != d:
        raise DomainError("lines must be unit vectors in R^d, d >= 3")
    if np.any(np.abs(np.linalg.norm(lines, axis=1) - 1) > 1e-12):
        raise DomainError("line directions must be unit vectors")
    basis = basis_indices(d, m)
    pts = np.vstack([lines, -lines])
    rows = []
    for v in pts:
        _, th, ph = _direction_angles(v)
        rows.append([evaluate_Y(idx, 1.0, np.array(th), ph) for idx in basis])
    L = np.array(rows, dtype=complex)
    ns = nullspace(L)
    rank = len(basis) - ns.shape[1]
    if ns.shape[1] == 0:
        raise DegreeTooSmallError(f"no degree-{m} harmonic vanishes on the lines (dim {len(basis)}, rank {rank})")
    vec = ns[:, 0]
    coeffs = {idx.alpha: complex(c) for idx, c in zip(basis, vec) if c != 0}
    sup = _sup_norm(d, coeffs)
    coeffs = {a: c / sup for a, c in coeffs.items()}
    vanish = _vanishing(d, coeffs, lines)
    if vanish >= VANISH_TOL:
        raise DegreeTooSmallError(f"null-space vector fails the vanishing check ({vanish:.3g})")
    return NullspaceHarmonic(d, m, lines, coeffs, ns.shape[1], rank, len(basis), vanish, 1.0)


# -- measure pair ------------------------------------------------------------------------

def sphere_quadrature(n_theta: int = QUAD_THETA, n_phi: int = QUAD_PHI):
    """Nodes (theta, phi) and weights: Gauss-Legendre in cos theta times trapezoid in phi."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    ph = np.linspace(0, 2 * math.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(np.arccos(x), ph, indexing="ij")
    W = np.outer(w, np.full(n_phi, 2 * math.pi / n_phi))
    return T.ravel(), P.ravel(), W.ravel()


def _transform(density: np.ndarray, nodes: np.ndarray, weights: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """int e^{-i <x, xi>} density(x) d sigma(x) for rows xi."""
    phase = np.exp(-1j * (xi @ nodes.T))
    return phase @ (density * weights)


@dataclass(frozen=True)
class MeasurePairReport:
    m: int
    radii: tuple[float, ...]
    max_line_difference: float
    min_density: float
    masses: tuple[float, float]
    fitted_constant: complex
    funk_hecke_constant: complex
    ratio_spread: float  # max relative deviation of the off-line ratio from the fitted constant
    resolution_change: float
    off_line_direction: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "radii": list(self.radii),
            "max_line_difference": self.max_line_difference,
            "min_density": self.min_density,
            "masses": list(self.masses),
            "fitted_constant": [self.fitted_constant.real, self.fitted_constant.imag],
            "funk_hecke_constant": [self.funk_hecke_constant.real, self.funk_hecke_constant.imag],
            "ratio_spread": self.ratio_spread,
            "resolution_change": self.resolution_change,
            "off_line_direction": list(self.off_line_direction),
        }


def measure_pair_check(
    Y: NullspaceHarmonic,
    radii=MEASURE_RADII,
    n_theta: int = QUAD_THETA,
    n_phi: int = QUAD_PHI,
    tol: float = QUAD_TOL,
) -> MeasurePairReport:
    """Fourier transforms of mu_+- = (1 +- Y/|Y|_inf) d sigma on the lines and off them (d = 3 only)."""
    if Y.d != 3:
        raise DomainError("the quadrature path covers d = 3 only")
    if not Y.is_real():
        Y = Y.real_part()
    s = NDSeries(3, 0.0, Y.coefficients)
    sup = _sup_norm(3, Y.coefficients)

    def run(nt, nph):
        T, P, W = sphere_quadrature(nt, nph)
        nodes = spherical_to_cartesian(3, 1.0, T[:, None], P)
        y = s.evaluate(1.0, T[:, None], P).real / sup
        return nodes, W, 1.0 + y, 1.0 - y

    nodes, W, dplus, dminus = run(n_theta, n_phi)
    dirs = np.vstack([Y.lines, -Y.lines])
    xis = np.vstack([r * dirs for r in radii])
    diff_lines = _transform(dplus, nodes, W, xis) - _transform(dminus, nodes, W, xis)
    max_line = float(np.max(np.abs(diff_lines)))

    # off-line direction: where |Y| is largest on a coarse grid
    th, ph = _sphere_grid(3, 48, 96)
    vals = np.abs(s.evaluate(1.0, th, ph))
    i = int(np.argmax(vals))
    off = spherical_to_cartesian(3, 1.0, th[i], ph[i])
    y_off = complex(s.evaluate(1.0, th[i], ph[i])) / sup
    ratios = []
    for r in radii:
        val = complex(_transform(dplus - dminus, nodes, W, (r * off)[None, :])[0])
        closed = r ** -0.5 * specfun.bessel_j(Y.m + 0.5, r) * y_off
        ratios.append(val / closed)
    fitted = ratios[0]
    spread = max(abs(q - fitted) / abs(fitted) for q in ratios)

    # self-consistency: doubling the resolution must not move the answers
    nodes2, W2, dplus2, dminus2 = run(2 * n_theta, 2 * n_phi)
    diff2 = _transform(dplus2, nodes2, W2, xis) - _transform(dminus2, nodes2, W2, xis)
    change = float(np.max(np.abs(diff2 - diff_lines)))
    if change > 10 * tol:
        raise ResolutionError(f"doubling the quadrature changed the transforms by {change:.3g}")

    masses = (float(np.sum(dplus * W)), float(np.sum(dminus * W)))
    # Funk-Hecke: int e^{-i<x, xi>} Y(x) d sigma = (2 pi)^{3/2} (-i)^m r^{-1/2} J_{m+1/2}(r) Y(xi/r)
    theory = 2 * (2 * math.pi) ** 1.5 * (-1j) ** Y.m
    return MeasurePairReport(
        m=Y.m,
        radii=tuple(float(r) for r in radii),
        max_line_difference=max_line,
        min_density=float(min(dplus.min(), dminus.min())),
        masses=masses,
        fitted_constant=complex(fitted),
        funk_hecke_constant=complex(theory),
        ratio_spread=float(spread),
        resolution_change=change,
        off_line_direction=tuple(float(v) for v in off),
    )


def counterexample(d: int, lines, m: int | None = None, k: float = 0.0, quadrature_tol: float = QUAD_TOL) -> dict:
    """Null-space harmonic for the lines, its vanishing report and (d = 3) the measure-pair check."""
    lines = np.atleast_2d(np.asarray(lines, dtype=float))
    degree = minimal_degree(d, len(lines)) if m is None else m
    Y = nullspace_harmonic(d, lines, degree)
    u = Y.extension(k)
    r = np.linspace(-2.0, 2.0, 20)
    pts = (r[:, None, None] * lines[None, :, :]).reshape(-1, d)
    out = {
        "harmonic": Y.to_dict(),
        "vanishing": {"sphere": Y.vanishing, "extension": float(np.max(np.abs(u.evaluate_cartesian(pts)))), "k": k},
        "measure_pair": None,
    }
    if d == 3:
        out["measure_pair"] = measure_pair_check(Y, tol=quadrature_tol).to_dict()
    return out
