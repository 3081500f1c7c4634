"""Order-by-order recovery of a polar series from traces on two curves.

At order n the lowest-order part of each (deflated) trace is a known
multiple rho(r) of a linear form in (c_n, c_{-n}). Extracting that limit on
both curves gives a 2x2 system; solving it, subtracting the order-n terms
from the samples and moving on to n + 1 reproduces the induction of the
uniqueness argument constructively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as poly
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, InconsistentTraceError, NoiseError, StiffnessError, ValidationError
from .series2d import CurveSpec, HelmholtzProfile, LaplaceProfile, PolarSeries, RadialProfile, tangential_normal

DIRICHLET = "dirichlet"
NEUMANN_ANGULAR = "neumann_angular"
ROBIN = "robin"
CONDITIONS = (DIRICHLET, NEUMANN_ANGULAR, ROBIN)

COMPLETE = "complete"
ABORTED_SMALL_DENOMINATOR = "aborted-small-denominator"
ABORTED_NOISE = "aborted-noise"

DET_TOL = 1e-8
NOISE_TOL = 1e-4
CONSISTENCY_TOL = 1e-6
MIN_SAMPLES = 8
DEFAULT_EXTRA_TERMS = 8


@dataclass(frozen=True)
class RobinSpec:
    """alpha(r) u + beta(r) d_t u + betatilde(r) d_n u, coefficients ascending in r."""

    alpha_poly: tuple[float, ...]
    beta_poly: tuple[float, ...] = (0.0,)
    betatilde_poly: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        for name in ("alpha_poly", "beta_poly", "betatilde_poly"):
            coeffs = tuple(float(c) for c in getattr(self, name)) or (0.0,)
            object.__setattr__(self, name, coeffs)
        if self.kappa == 0:
            if self.alpha(0.0) == 0:
                raise ValidationError("alpha(0) must be nonzero when beta(0) = betatilde(0) = 0", "alpha_poly")
            for name in ("beta_poly", "betatilde_poly"):
                coeffs = getattr(self, name)
                if len(coeffs) > 1 and coeffs[1] != 0:
                    raise ValidationError("must be o(r): linear coefficient has to vanish", name)

    @property
    def kappa(self) -> complex:
        return complex(self.beta_poly[0], self.betatilde_poly[0])

    def alpha(self, r):
        return poly.polyval(r, self.alpha_poly)

    def beta(self, r):
        return poly.polyval(r, self.beta_poly)

    def betatilde(self, r):
        return poly.polyval(r, self.betatilde_poly)


@dataclass(frozen=True)
class TraceData:
    curve: CurveSpec
    condition: str
    r: np.ndarray
    values: np.ndarray
    robin: RobinSpec | None = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).ravel()
        v = np.asarray(self.values, dtype=complex).ravel()
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        if self.condition not in CONDITIONS:
            raise ValidationError(f"unknown condition {self.condition!r}", "condition")
        if (self.condition == ROBIN) != (self.robin is not None):
            raise ValidationError("a RobinSpec is required exactly for the robin condition", "robin")
        if len(r) != len(v):
            raise ValidationError("r and values differ in length", "samples")
        if len(r) < MIN_SAMPLES:
            raise ValidationError(f"need at least {MIN_SAMPLES} samples", "samples")
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValidationError("radii must be positive and strictly decreasing", "samples")
        if r.min() > 1e-2:
            raise ValidationError("smallest radius must be at most 1e-2", "samples")
        if r.max() > self.curve.r_max:
            raise ValidationError("radius outside the curve range", "samples")

    def with_values(self, values) -> "TraceData":
        return TraceData(self.curve, self.condition, self.r, values, self.robin)


# -- forward traces -------------------------------------------------------

def apply_condition(s: PolarSeries, curve: CurveSpec, condition: str, r, robin: RobinSpec | None = None):
    """The trace functional applied to ``s`` along ``curve`` at radii ``r``."""
    r = np.asarray(r, dtype=float)
    th = curve.theta(r)
    if condition == DIRICHLET:
        return np.asarray(s.evaluate(r, th))
    if condition == NEUMANN_ANGULAR:
        return np.asarray(s.theta_derivative(r, th))
    if condition == ROBIN:
        dt, dn = tangential_normal(s, curve, r)
        return robin.alpha(r) * s.evaluate(r, th) + robin.beta(r) * dt + robin.betatilde(r) * dn
    raise ValidationError(f"unknown condition {condition!r}", "condition")


def make_trace(s: PolarSeries, curve: CurveSpec, condition: str, r, robin: RobinSpec | None = None) -> TraceData:
    r = np.sort(np.asarray(r, dtype=float))[::-1]
    return TraceData(curve, condition, r, apply_condition(s, curve, condition, r, robin), robin)


def default_radii(r_max: float = 0.5, count: int = 64, r_min: float = 1e-3) -> np.ndarray:
    """Decreasing sample radii, Chebyshev-clustered near both ends."""
    t = np.cos(np.linspace(0, math.pi, count))
    return r_min + (r_max - r_min) * (t + 1) / 2


# -- radial profiles ------------------------------------------------------

def profile_for(kind) -> RadialProfile:
    """'laplace', ('helmholtz', k) or ('radial_ode', h), or a ready RadialProfile."""
    if isinstance(kind, RadialProfile):
        return kind
    if kind == "laplace":
        return LaplaceProfile()
    name, arg = kind
    if name == "helmholtz":
        return LaplaceProfile() if arg == 0 else HelmholtzProfile(float(arg))
    if name == "radial_ode":
        return ODEProfile(arg)
    raise DomainError(f"unknown profile {kind!r}")


def _psi_rhs(h: Callable, m: int):
    # phi = r^m psi turns the radial equation into psi'' + (2m+1)/r psi' + h psi = 0
    def rhs(r, y):
        return np.array([y[1], -(2 * m + 1) / r * y[1] - h(r) * y[0]])

    return rhs


def _integrate_psi(h: Callable, m: int, r_end: float):
    """RK4 for psi on (0, r_end] from a series start; returns grid, psi, psi'."""
    h0 = float(h(0.0))
    r = min(1e-4, r_end / 10)
    y = np.array([1.0 - h0 * r * r / (4 * (m + 1)), -h0 * r / (2 * (m + 1))])
    rhs = _psi_rhs(h, m)
    rs, ys = [r], [y.copy()]
    while r < r_end:
        step = min(1e-3, 0.5 * r / (2 * m + 1), r_end - r)
        k1 = rhs(r, y)
        k2 = rhs(r + step / 2, y + step / 2 * k1)
        k3 = rhs(r + step / 2, y + step / 2 * k2)
        k4 = rhs(r + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        r += step
        if not np.all(np.isfinite(y)) or abs(y[0]) > 1e200:
            raise StiffnessError(f"radial ODE integration blew up at r = {r:.3g} (m = {m})")
        rs.append(r)
        ys.append(y.copy())
    ys = np.array(ys)
    return np.array(rs), ys[:, 0], ys[:, 1]


class ODEProfile(RadialProfile):
    """Normalized solution of phi'' + phi'/r + (h - m^2/r^2) phi = 0 with phi ~ r^m."""

    def __init__(self, h: Callable, r_end: float = 1.0):
        self.h = h
        self.r_end = r_end
        self._cache: dict[int, CubicHermiteSpline] = {}

    def _psi(self, m: int) -> CubicHermiteSpline:
        if m not in self._cache:
            rs, psi, dpsi = _integrate_psi(self.h, m, self.r_end)
            # prepend the exact start psi(0) = 1, psi'(0) = 0
            rs = np.concatenate([[0.0], rs])
            psi = np.concatenate([[1.0], psi])
            dpsi = np.concatenate([[0.0], dpsi])
            self._cache[m] = CubicHermiteSpline(rs, psi, dpsi, extrapolate=False)
        return self._cache[m]

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_end):
            raise DomainError(f"radial ODE profile is tabulated on [0, {self.r_end}]")
        return r

    def value(self, n, r):
        r = self._check(r)
        return r**n * self._psi(n)(r)

    def derivative(self, n, r):
        r = self._check(r)
        spline = self._psi(n)
        lead = n * r ** (n - 1) if n > 0 else np.zeros_like(r)
        return lead * spline(r) + r**n * spline(r, 1)

    def over_r(self, n, r):
        r = self._check(r)
        if n == 0:
            return np.zeros_like(r)
        return n * r ** (n - 1) * self._psi(n)(r)


def radial_profile_ode(h: Callable, m: int, r, r_end: float | None = None):
    """phi_m(r) for the potential h, normalized by phi_m(r)/r^m -> 1 at 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("radial_profile_ode needs r > 0")
    end = float(r_arr.max()) if r_end is None else r_end
    out = ODEProfile(h, end).value(abs(m), r_arr)
    return float(out) if np.ndim(r) == 0 else out


# -- extraction -------------------------------------------------------------

@dataclass(frozen=True)
class Extraction:
    limit: complex
    error_estimate: float


def _leading(profile: RadialProfile, n: int) -> float:
    """a_n with phi_n(r) = a_n r**n (1 + o(1))."""
    if isinstance(profile, HelmholtzProfile):
        return (profile.k / 2) ** n / math.factorial(n)
    return 1.0


def _order_scale(trace: TraceData, profile: RadialProfile, n: int):
    """(s, lead, row): at lowest order the trace is lead r**s (a c_n + b c_{-n}).

    ``row`` = (a, b) is None when the trace carries no order-n information
    (order 0 for angular Neumann data and for Robin data with kappa != 0).
    """
    th0 = trace.curve.theta0
    e_plus, e_minus = np.exp(1j * n * th0), np.exp(-1j * n * th0)
    a_n = _leading(profile, n)
    if trace.condition == DIRICHLET:
        return n, a_n, ((e_plus, e_minus) if n else (1.0, 0.0))
    if trace.condition == NEUMANN_ANGULAR:
        return n, 1j * a_n, ((n * e_plus, -n * e_minus) if n else None)
    kappa = trace.robin.kappa
    if kappa != 0:
        if n == 0:
            return 0, a_n, None
        return n - 1, n * a_n, (kappa * e_plus, np.conj(kappa) * e_minus)
    a0 = trace.robin.alpha(0.0)
    return n, a0 * a_n, ((e_plus, e_minus) if n else (1.0, 0.0))


def _basis_limit(trace: TraceData, prof: RadialProfile, s: int, top: int) -> complex:
    """Coefficient of phi_s / a_s when the samples are fitted by phi_e / a_e, e = 0..top."""
    r = trace.r
    cols = np.column_stack([prof.value(e, r) / _leading(prof, e) for e in range(top + 1)])
    norms = np.linalg.norm(cols, axis=0)
    coef, *_ = np.linalg.lstsq(cols / norms, trace.values, rcond=None)
    return complex(coef[s] / norms[s])


def extract_order_coefficient(
    trace: TraceData,
    profile,
    n: int,
    top: int | None = None,
    noise_tol: float = NOISE_TOL,
) -> Extraction:
    """Limit of trace(r) / rho_n(r) as r -> 0 for a single trace.

    rho_n(r) ~ lead r**s is the order-n scale of the trace. The samples are
    fitted by least squares in the normalized profiles phi_e / a_e,
    e = 0..top (monomials for Laplace, Bessel functions for Helmholtz), and
    the limit is the coefficient at e = s divided by ``lead``. Lower orders
    left in the samples land in their own coefficients. The error estimate
    is the change of the limit when ``top`` is lowered by one.
    """
    prof = profile_for(profile)
    s, lead, _ = _order_scale(trace, prof, n)
    scale_t = float(np.max(np.abs(trace.values)))
    if scale_t == 0.0:
        return Extraction(0j, 0.0)
    top = s + DEFAULT_EXTRA_TERMS if top is None else max(top, s + 1)
    limit = _basis_limit(trace, prof, s, top) / lead
    estimate = abs(limit - _basis_limit(trace, prof, s, top - 1) / lead)
    reference = abs(limit) + scale_t / (abs(lead) * float(trace.r.max()) ** s)
    if estimate > noise_tol * reference:
        raise NoiseError(f"order {n}: extrapolation error estimate {estimate:.3g} exceeds tolerance", estimate)
    return Extraction(limit, estimate)


# -- recovery ---------------------------------------------------------------

@dataclass(frozen=True)
class OrderDiagnostic:
    n: int
    det_modulus: float
    residual: float
    error_estimate: float


@dataclass(frozen=True)
class RecoveryResult:
    recovered: PolarSeries
    diagnostics: list[OrderDiagnostic]
    status: str
    aborted_at: int | None = None
    origin_assumed_zero: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    def status_label(self) -> str:
        return self.status if self.aborted_at is None else f"{self.status}({self.aborted_at})"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "aborted_at": self.aborted_at,
            "origin_assumed_zero": self.origin_assumed_zero,
            "series": self.recovered.to_dict(),
            "diagnostics": [
                {"n": d.n, "det_modulus": d.det_modulus, "residual": d.residual, "error_estimate": d.error_estimate}
                for d in self.diagnostics
            ],
            "notes": list(self.notes),
        }


def order_matrix(trace1: TraceData, trace2: TraceData, n: int, profile="laplace") -> np.ndarray:
    """The 2x2 coefficient matrix of (c_n, c_{-n}) at order n >= 1."""
    prof = profile_for(profile)
    rows = [_order_scale(tr, prof, n)[2] for tr in (trace1, trace2)]
    return np.array(rows, dtype=complex)


def system_matrix(theta1: float, theta2: float, n: int, cond1: str, cond2: str,
                  kappa1: complex = 0, kappa2: complex = 0) -> np.ndarray:
    """Same rows as ``order_matrix`` from the base angles alone."""

    def row(theta, cond, kappa):
        ep, em = np.exp(1j * n * theta), np.exp(-1j * n * theta)
        if cond == DIRICHLET or (cond == ROBIN and kappa == 0):
            return ep, em
        if cond == NEUMANN_ANGULAR:
            return n * ep, -n * em
        return kappa * ep, np.conj(kappa) * em

    return np.array([row(theta1, cond1, kappa1), row(theta2, cond2, kappa2)], dtype=complex)


def _mode_columns(traces, k: float, custom, modes: Sequence[int]) -> np.ndarray:
    blocks = []
    for tr in traces:
        cols = [apply_condition(PolarSeries(k, {m: 1.0}, max(64, abs(m)), custom), tr.curve, tr.condition, tr.r, tr.robin)
                for m in modes]
        blocks.append(np.column_stack(cols))
    return np.vstack(blocks)


def joint_order_fit(traces, k: float, custom, n: int, top: int, split_zero: bool = False,
                    reference: float | None = None):
    """Least-squares amplitudes of modes n <= |m| <= top explaining both traces.

    Returns (amplitudes by mode, residual norm relative to ``reference``,
    which defaults to the norm of the data). The columns are the
    exact forward traces of single modes, so the tail of orders above n is
    modelled rather than extrapolated away. With ``split_zero`` each trace
    gets its own mode-0 amplitude, returned under keys ('0', j).
    """
    modes = ([0] if n == 0 else []) + [x for m in range(max(n, 1), top + 1) for x in (m, -m)]
    a = _mode_columns(traces, k, custom, modes)
    keys: list = list(modes)
    if n == 0 and split_zero:
        rows = len(traces[0].r)
        first = a[:, 0].copy()
        first[rows:] = 0
        second = a[:, 0] - first
        a = np.column_stack([first, second, a[:, 1:]])
        keys = [("0", 0), ("0", 1)] + keys[1:]
    b = np.concatenate([tr.values for tr in traces])
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0] = 1.0
    x, *_ = np.linalg.lstsq(a / norms, b, rcond=None)
    x = x / norms
    scale = float(np.linalg.norm(b)) if reference is None else reference
    resid = float(np.linalg.norm(a @ x - b)) / scale if scale else 0.0
    return dict(zip(keys, x)), resid


def recover(
    trace1: TraceData,
    trace2: TraceData,
    profile="laplace",
    N: int = 6,
    origin_value: complex | None = None,
    det_tol: float = DET_TOL,
    noise_tol: float = NOISE_TOL,
    consistency_tol: float = CONSISTENCY_TOL,
    fit_extra: int = 0,
) -> RecoveryResult:
    """Recover c_m, |m| <= N, from two traces through the origin.

    Order n proceeds as in the uniqueness induction: the order-n limits of
    the deflated traces are read off, the 2x2 system for (c_n, c_{-n}) is
    solved, and the order-n terms are subtracted from the samples. The
    limits come from a joint least-squares model of both traces in the
    modes n..N + fit_extra. A determinant below det_tol times the product
    of the row norms stops the recursion with a small-denominator status.
    """
    prof = profile_for(profile)
    k = prof.k if isinstance(prof, HelmholtzProfile) else 0.0
    custom = None if isinstance(prof, (LaplaceProfile, HelmholtzProfile)) else prof
    m_max = max(N + fit_extra, 64)
    top = N + fit_extra
    traces = [trace1, trace2]
    # residuals are measured against the undeflated data, not the leftover
    reference = float(np.linalg.norm(np.concatenate([tr.values for tr in traces])))
    modes: dict[int, complex] = {}
    diagnostics: list[OrderDiagnostic] = []
    notes: list[str] = []
    assumed = False

    def deflate(new_modes: dict[int, complex]):
        part = PolarSeries(k, new_modes, m_max, custom)
        for j, tr in enumerate(traces):
            fwd = apply_condition(part, tr.curve, tr.condition, tr.r, tr.robin)
            traces[j] = tr.with_values(tr.values - fwd)

    def result(status, n=None):
        return RecoveryResult(PolarSeries(k, modes, m_max, custom), diagnostics, status, n, assumed, notes)

    # order 0: c_0 from the traces that see it, or from the value at the origin
    seeing = [tr for tr in traces if _order_scale(tr, prof, 0)[2] is not None]
    phi0 = complex(prof.value(0, np.array([0.0]))[0])
    if seeing:
        fit, resid = joint_order_fit(traces, k, custom, 0, top, reference=reference)
        if len(seeing) == 2:
            # separate c_0 per trace: clean but different limits mean inconsistent traces
            split, split_resid = joint_order_fit(traces, k, custom, 0, top, split_zero=True, reference=reference)
            pair = (split[("0", 0)], split[("0", 1)])
            gap = abs(pair[0] - pair[1])
            if split_resid <= noise_tol and gap > consistency_tol * max(1.0, abs(pair[0]), abs(pair[1])):
                raise InconsistentTraceError(f"order 0 limits disagree by {gap:.3g}", 0)
        if resid > noise_tol:
            diagnostics.append(OrderDiagnostic(0, 1.0, resid, resid))
            return result(ABORTED_NOISE, 0)
        c0 = complex(fit[0])
        if origin_value is not None and abs(c0 * phi0 - origin_value) > consistency_tol * max(1.0, abs(origin_value)):
            raise InconsistentTraceError("trace limits disagree with the given origin value", 0)
    elif origin_value is not None:
        c0, resid = complex(origin_value) / phi0, 0.0
    else:
        c0, resid, assumed = 0j, 0.0, True
        notes.append("no trace determines c_0; assumed u(0, 0) = 0")
    diagnostics.append(OrderDiagnostic(0, 1.0, resid, resid))
    if c0 != 0:
        modes[0] = c0
        deflate({0: c0})

    for n in range(1, N + 1):
        mat = order_matrix(traces[0], traces[1], n, prof)
        det = complex(np.linalg.det(mat))
        tol = det_tol * float(np.prod(np.linalg.norm(mat, axis=1)))
        if abs(det) < tol:
            diagnostics.append(OrderDiagnostic(n, abs(det), float("nan"), float("nan")))
            return result(ABORTED_SMALL_DENOMINATOR, n)
        fit, fit_resid = joint_order_fit(traces, k, custom, n, top, reference=reference)
        if fit_resid > noise_tol:
            diagnostics.append(OrderDiagnostic(n, abs(det), float("nan"), fit_resid))
            return result(ABORTED_NOISE, n)
        # order-n limits of the two deflated traces, then the 2x2 solve
        limits = mat @ np.array([fit[n], fit[-n]])
        sol = np.linalg.solve(mat, limits)
        resid = float(np.max(np.abs(mat @ sol - limits)))
        if resid > consistency_tol * max(1.0, float(np.max(np.abs(limits)))):
            raise InconsistentTraceError(f"order {n} system residual {resid:.3g}", n)
        diagnostics.append(OrderDiagnostic(n, abs(det), resid, fit_resid))
        new = {n: complex(sol[0]), -n: complex(sol[1])}
        modes.update({m: c for m, c in new.items() if c != 0})
        deflate(new)
    return result(COMPLETE)
