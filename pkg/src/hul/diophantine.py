"""Continued fractions of angle ratios and the Diophantine tests built on them.

All statements are finite-depth certificates about a double-precision
number. The expansion is carried out exactly on the rational value of the
double, and stops as soon as a convergent reproduces ``x`` to the
double-precision noise floor: past that point the partial quotients describe
rounding, not the number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import ConstraintError, DepthError, DomainError, NoValidPairError

RATIONAL = "rational-within-depth"
IRRATIONAL = "irrational-within-depth"

MAX_DEPTH = 64
DEFAULT_DEPTH = 40
NOISE_FLOOR = 1e-14
QUOTIENT_LIMIT = 1e15
RATIONAL_DENOMINATOR_LIMIT = 10**6


@dataclass(frozen=True)
class DiophantineReport:
    x: float
    cf_terms: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    rational_verdict: str
    bad_approx_witness: float | None
    stop_reason: str

    @property
    def is_rational(self) -> bool:
        return self.rational_verdict == RATIONAL

    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "cf_terms": list(self.cf_terms),
            "convergents": [list(pq) for pq in self.convergents],
            "rational_verdict": self.rational_verdict,
            "bad_approx_witness": self.bad_approx_witness,
            "stop_reason": self.stop_reason,
        }


def continued_fraction(x: float, depth: int = DEFAULT_DEPTH) -> DiophantineReport:
    """Partial quotients and convergents of ``x`` up to ``depth`` terms.

    The verdict is rational-within-depth when the remainder vanishes, a
    partial quotient exceeds 1e15, or a convergent with denominator at most
    1e6 reproduces ``x`` to 1e-14.
    """
    if not math.isfinite(x):
        raise DomainError("continued_fraction needs a finite number")
    if not 1 <= depth <= MAX_DEPTH:
        raise DomainError(f"depth must lie in [1, {MAX_DEPTH}]")

    exact = Fraction(x)
    floor_tol = NOISE_FLOOR * max(1.0, abs(x))
    terms: list[int] = []
    convergents: list[tuple[int, int]] = []
    p_prev, p_cur = 0, 1
    q_prev, q_cur = 1, 0
    value = exact
    verdict, reason = IRRATIONAL, "depth"
    while len(terms) < depth:
        a = math.floor(value)
        terms.append(a)
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        convergents.append((p_cur, q_cur))
        rem = value - a
        err = abs(float(exact - Fraction(p_cur, q_cur)))
        if rem == 0:
            verdict, reason = RATIONAL, "exact"
            break
        if err <= floor_tol:
            if q_cur <= RATIONAL_DENOMINATOR_LIMIT:
                verdict, reason = RATIONAL, "noise-floor"
            else:
                reason = "precision-exhausted"
            break
        value = 1 / rem
        if value > QUOTIENT_LIMIT:
            verdict, reason = RATIONAL, "large-quotient"
            break

    if verdict == RATIONAL and len(terms) > 1 and terms[-1] == 1:
        # [..., a, 1] and [..., a + 1] are the same rational; keep Euclid's form
        terms[-2:] = [terms[-2] + 1]
        convergents[-2:] = [convergents[-1]]

    witness = None
    if verdict == IRRATIONAL:
        witness = max(
            1.0 / (q * math.pi * abs(q * x - p)) for p, q in convergents if q * x != p
        )
    return DiophantineReport(
        x=float(x),
        cf_terms=tuple(terms),
        convergents=tuple(convergents),
        rational_verdict=verdict,
        bad_approx_witness=witness,
        stop_reason=reason,
    )


@dataclass(frozen=True)
class BadApproxResult:
    verdict: bool
    worst_k: int
    worst_l: int
    worst_margin: float  # min over k of c k |k x pi - l pi|; verdict iff >= 1
    k_max: int


def badly_approximable(x: float, c: float, k_max: int) -> BadApproxResult:
    """Check pi |k x - l| >= 1/(c k) for all 1 <= k <= k_max and the nearest l.

    A finite scan, not a proof. Intended for k_max up to about 1e7; beyond
    that the rounding of ``k * x`` competes with the quantity tested.
    """
    if not c > math.sqrt(5.0):
        raise ConstraintError("badly_approximable needs c > sqrt(5)")
    if k_max < 1:
        raise DomainError("k_max must be positive")
    worst_margin, worst_k, worst_l = math.inf, 1, 0
    chunk = 1 << 20
    for start in range(1, k_max + 1, chunk):
        k = np.arange(start, min(start + chunk, k_max + 1), dtype=float)
        kx = k * x
        ell = np.rint(kx)
        margin = c * k * math.pi * np.abs(kx - ell)
        i = int(np.argmin(margin))
        if margin[i] < worst_margin:
            worst_margin, worst_k, worst_l = float(margin[i]), int(k[i]), int(ell[i])
    return BadApproxResult(worst_margin >= 1.0, worst_k, worst_l, worst_margin, k_max)


def dirichlet_pairs(x: float, n_min: int = 1, depth: int = DEFAULT_DEPTH) -> Iterator[tuple[int, int]]:
    """Convergent pairs (n, p) with n >= n_min and |n x - p| <= 1/n, distinct n, increasing."""
    report = continued_fraction(x, depth)
    if report.is_rational:
        raise NoValidPairError(f"x = {x!r} is rational within depth {depth}")
    seen = set()
    for p, q in report.convergents:
        if q < n_min or q in seen:
            continue
        if abs(q * x - p) <= 1.0 / q:
            seen.add(q)
            yield q, p


def dirichlet_pair(x: float, n_min: int = 1, depth: int = DEFAULT_DEPTH) -> tuple[int, int]:
    """Smallest convergent denominator n >= n_min with |n x - p| <= 1/n."""
    for n, p in dirichlet_pairs(x, n_min, depth):
        if abs(n * x - p) > 1.0 / n:  # re-checked as returned
            raise AssertionError("convergent violates Dirichlet's inequality")
        return n, p
    raise DepthError(f"no convergent denominator >= {n_min} within depth {depth}")


def liouville(terms: int) -> float:
    """Truncated Liouville-type constant sum_{j=1}^{terms} 10**(-j!)."""
    return float(sum(Fraction(1, 10 ** math.factorial(j)) for j in range(1, terms + 1)))
