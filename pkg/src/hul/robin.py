"""Helmholtz solutions with constant Robin conditions on two lines through 0.

On the line through 0 in direction theta_j the condition is
alpha_j u + beta_j d_n u = 0 with the fixed normal e_theta(theta_j). For
u = sum c_m J_|m|(k r) e^{i m theta} the coefficient of J_m gives the
three-term recursion

    c_{m+1} e^{i(m+1)t} - c_{-m-1} e^{-i(m+1)t}
        = g (c_m e^{imt} + c_{-m} e^{-imt}) - c_{m-1} e^{i(m-1)t} + c_{-m+1} e^{-i(m-1)t}

with g = 2i alpha/(k beta) (the m = 0 step reads c_1 e^{it} - c_{-1} e^{-it}
= g c_0). Both half-lines of a line give the same equations, so the
solution space is at most one-dimensional and fixed by c_0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diophantine
from .errors import DegeneracyError, DomainError
from .series2d import DEFAULT_M_MAX, CurveSpec, PolarSeries, tangential_normal

DEGENERACY_TOL = 1e-14
TAIL_TOL = 1e-12
DEFAULT_RADIUS = 0.8
DEFAULT_BAD_APPROX_C = 3.0
DEFAULT_K_MAX = 10**4

CERTIFIED = "certified-on-disk"
INCONCLUSIVE = "inconclusive"
AT_MOST_ONE = "at most 1"
EXACTLY_ONE = "exactly 1"


@dataclass(frozen=True)
class RobinLineProblem:
    k: float
    theta1: float
    theta2: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError("wavenumber k must be positive")
        if self.beta1 == 0 or self.beta2 == 0:
            raise DomainError("beta1 and beta2 must be nonzero")

    @property
    def gamma1(self) -> complex:
        return 2j * self.alpha1 / self.beta1

    @property
    def gamma2(self) -> complex:
        return 2j * self.alpha2 / self.beta2

    def recursion_gammas(self) -> tuple[complex, complex]:
        """gamma_j / k: the constants of the recursion for J_m(k r) profiles."""
        return self.gamma1 / self.k, self.gamma2 / self.k

    @property
    def delta(self) -> float:
        return self.theta1 - self.theta2

    def growth_base(self) -> float:
        g1, g2 = self.recursion_gammas()
        return 2 + abs(g1) + abs(g2)


@dataclass(frozen=True)
class GrowthEntry:
    m: int
    abs_c_plus: float
    abs_c_minus: float
    sine_product: float  # prod_{j<=m} |sin j(theta1 - theta2)|
    kappa: float  # max(|c_m|, |c_-m|) * sine_product
    bound: float  # (2 + |g1| + |g2|)**m

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class RobinSolution:
    problem: RobinLineProblem
    coefficients: PolarSeries
    M: int
    growth_log: list[GrowthEntry]
    convergence_verdict: str
    radius: float
    tail_estimate: float
    angle_report: diophantine.DiophantineReport | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.convergence_verdict == CERTIFIED

    def coefficient(self, m: int) -> complex:
        return self.coefficients.coefficient(m)

    def verdict_label(self) -> str:
        return f"{CERTIFIED}({self.radius:g})" if self.certified else INCONCLUSIVE

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "series": self.coefficients.to_dict(),
            "growth_log": [g.to_dict() for g in self.growth_log],
            "convergence_verdict": self.convergence_verdict,
            "radius": self.radius,
            "tail_estimate": self.tail_estimate,
            "angle_verdict": None if self.angle_report is None else self.angle_report.rational_verdict,
            "notes": list(self.notes),
        }


def _step_rhs(c: dict[int, complex], m: int, theta: float, g: complex) -> complex:
    if m == 0:
        return g * c[0]
    e = np.exp(1j * theta)
    left = g * (c[m] * e**m + c[-m] * e ** (-m))
    return left - (c[m - 1] * e ** (m - 1) - c[-(m - 1)] * e ** (-(m - 1)))


def _step_matrix(m: int, th1: float, th2: float) -> np.ndarray:
    """Rows (e^{i(m+1)t}, -e^{-i(m+1)t}) acting on (c_{m+1}, c_{-(m+1)})."""
    return np.array([[np.exp(1j * (m + 1) * t), -np.exp(-1j * (m + 1) * t)] for t in (th1, th2)])


def robin_coefficients(p: RobinLineProblem, M: int, c0: complex = 1.0) -> dict[int, complex]:
    """c_m for |m| <= M from the recursion; DegeneracyError if some sin(m delta) vanishes."""
    if M < 0:
        raise DomainError("truncation order M must be nonnegative")
    g1, g2 = p.recursion_gammas()
    c: dict[int, complex] = {0: complex(c0)}
    for m in range(M):
        s = math.sin((m + 1) * p.delta)
        if abs(s) < DEGENERACY_TOL:
            raise DegeneracyError(f"sin({m + 1}(theta1 - theta2)) = {s:.3g} vanishes", m + 1)
        rhs = np.array([_step_rhs(c, m, p.theta1, g1), _step_rhs(c, m, p.theta2, g2)])
        # det = -2i sin((m+1) delta), solved in closed form by Cramer's rule
        a = _step_matrix(m, p.theta1, p.theta2)
        det = -2j * s
        c[m + 1] = complex((rhs[0] * a[1, 1] - rhs[1] * a[0, 1]) / det)
        c[-(m + 1)] = complex((a[0, 0] * rhs[1] - a[1, 0] * rhs[0]) / det)
    return c


def recursion_residuals(p: RobinLineProblem, c: dict[int, complex], M: int) -> list[float]:
    """Relative residual of each step m = 0..M-1 on both lines.

    Coefficients grow like 1/prod sin(j delta), so the residual is scaled by
    the largest term of the step's equation.
    """
    g1, g2 = p.recursion_gammas()
    out = []
    for m in range(M):
        worst = 0.0
        for theta, g in ((p.theta1, g1), (p.theta2, g2)):
            e = np.exp(1j * theta)
            lhs = c[m + 1] * e ** (m + 1) - c[-(m + 1)] * e ** (-(m + 1))
            rhs = _step_rhs(c, m, theta, g)
            terms = [abs(c[m + 1]), abs(c[-(m + 1)]), abs(g) * abs(c[m]), abs(g) * abs(c[-m])]
            if m:
                terms += [abs(c[m - 1]), abs(c[-(m - 1)])]
            worst = max(worst, abs(lhs - rhs) / max(max(terms), 1e-300))
        out.append(worst)
    return out


def growth_log(p: RobinLineProblem, c: dict[int, complex], M: int) -> list[GrowthEntry]:
    base = p.growth_base()
    prod = 1.0
    log = []
    for m in range(1, M + 1):
        prod *= abs(math.sin(m * p.delta))
        kappa = max(abs(c[m]), abs(c[-m])) * prod
        log.append(GrowthEntry(m, abs(c[m]), abs(c[-m]), prod, kappa, base**m))
    return log


def bessel_majorant_terms(p: RobinLineProblem, c: dict[int, complex], M: int, radius: float) -> np.ndarray:
    """(|c_m| + |c_-m|) (k r0)^m / (2^m m!), the majorant of |mode m| on |x| <= r0."""
    x = p.k * radius / 2
    out = np.empty(M + 1)
    for m in range(M + 1):
        amp = abs(c[0]) if m == 0 else abs(c[m]) + abs(c[-m])
        out[m] = amp * math.exp(m * math.log(x) - math.lgamma(m + 1)) if amp else 0.0
    return out


def tail_estimate(terms: np.ndarray, window: int = 5) -> float:
    """Remainder bound beyond the last term by a geometric majorant.

    The ratio is the largest successive ratio over the last ``window``
    terms; an infinite estimate means the terms are not yet decaying.
    """
    if not np.any(terms):
        return 0.0
    last = terms[-(window + 1):]
    if len(last) < 2:
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = last[1:] / last[:-1]
    ratios = ratios[np.isfinite(ratios)]
    q = float(np.max(ratios)) if len(ratios) else 0.0
    if q >= 1.0:
        return math.inf
    return float(terms[-1]) * q / (1 - q)


def build_robin_solution(
    p: RobinLineProblem, M: int, radius: float = DEFAULT_RADIUS, c0: complex = 1.0
) -> RobinSolution:
    """The normalized solution c_0 = 1 truncated at |m| <= M, with growth and tail diagnostics."""
    if not 0 < radius < 1:
        raise DomainError("certified radius must lie in (0, 1)")
    report = diophantine.continued_fraction(p.delta / math.pi)
    c = robin_coefficients(p, M, c0)
    series = PolarSeries(p.k, c, max(DEFAULT_M_MAX, M))
    tail = tail_estimate(bessel_majorant_terms(p, c, M, radius))
    verdict = CERTIFIED if tail < TAIL_TOL else INCONCLUSIVE
    notes = []
    if report.is_rational:
        notes.append("angle ratio is rational within depth; a degeneracy lies beyond M")
    return RobinSolution(p, series, M, growth_log(p, c, M), verdict, radius, tail, report, notes)


def boundary_residuals(sol: RobinSolution, r) -> dict[str, np.ndarray]:
    """|alpha u + beta d_n u| on the four half-lines, normal e_theta(theta_j) throughout."""
    p = sol.problem
    r = np.asarray(r, dtype=float)
    out = {}
    for j, (theta, alpha, beta) in enumerate(((p.theta1, p.alpha1, p.beta1), (p.theta2, p.alpha2, p.beta2)), 1):
        for side, sign in (("+", 1.0), ("-", -1.0)):
            ang = theta if sign > 0 else theta + math.pi
            curve = CurveSpec.ray(ang, float(r.max()))
            _, dn = tangential_normal(sol.coefficients, curve, r)
            # on the opposite half-line e_theta(ang) = -e_theta(theta)
            value = alpha * sol.coefficients.evaluate(r, ang) + beta * sign * dn
            out[f"line{j}{side}"] = np.abs(value)
    return out


@dataclass(frozen=True)
class DimensionCertificate:
    verdict: str  # "at most 1" or "exactly 1"
    radius: float | None
    badly_approximable: bool | None
    convergence: str
    degenerate_at: int | None = None

    def label(self) -> str:
        if self.verdict == EXACTLY_ONE:
            return f"{EXACTLY_ONE} (certified to radius {self.radius:g})"
        if self.degenerate_at is not None:
            return f"{AT_MOST_ONE} (degenerate recursion at m = {self.degenerate_at})"
        return f"{AT_MOST_ONE} ({INCONCLUSIVE})"

    def to_dict(self) -> dict:
        return dict(self.__dict__, label=self.label())


def dimension_certificate(
    p: RobinLineProblem,
    M: int,
    radius: float = DEFAULT_RADIUS,
    c: float = DEFAULT_BAD_APPROX_C,
    k_max: int = DEFAULT_K_MAX,
) -> DimensionCertificate:
    """'at most 1' always; 'exactly 1' when the angle is badly approximable to k_max and the tail certifies."""
    bad = diophantine.badly_approximable(p.delta / math.pi, c, k_max).verdict
    try:
        sol = build_robin_solution(p, M, radius)
    except DegeneracyError as exc:
        return DimensionCertificate(AT_MOST_ONE, None, bad, INCONCLUSIVE, exc.m)
    if bad and sol.certified:
        return DimensionCertificate(EXACTLY_ONE, radius, bad, sol.convergence_verdict)
    return DimensionCertificate(AT_MOST_ONE, None, bad, sol.convergence_verdict)


def neumann_axis_coefficients(k: float, theta2: float, alpha2: float, beta2: float, M: int) -> np.ndarray:
    """c_0..c_M for Neumann data on the x-axis (c_{-m} = c_m) and Robin data on theta2.

    c_{m+1} sin((m+1) t) = (2 alpha/(k beta)) cos(m t) c_m - c_{m-1} sin((m-1) t),
    with c_1 = alpha c_0/(k beta sin t). Raw growth data only.
    """
    ratio = alpha2 / (k * beta2)
    c = np.zeros(M + 1)
    c[0] = 1.0
    for m in range(M):
        s = math.sin((m + 1) * theta2)
        if abs(s) < DEGENERACY_TOL:
            raise DegeneracyError(f"sin({m + 1} theta2) vanishes", m + 1)
        if m == 0:
            c[1] = ratio * c[0] / s
        else:
            c[m + 1] = (2 * ratio * math.cos(m * theta2) * c[m] - c[m - 1] * math.sin((m - 1) * theta2)) / s
    return c
