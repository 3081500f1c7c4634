import math

import numpy as np
import pytest

from hul import instability as ins
from hul.errors import DomainError, NoValidPairError
from hul.series2d import disk_grid, helmholtz_residual

SQRT2_ANGLE = math.pi * (math.sqrt(2) - 1)
GOLDEN_ANGLE = math.pi * (math.sqrt(5) - 1) / 2


def test_sqrt2_first_witness():
    w = ins.construct_witness(0.0, SQRT2_ANGLE, 1e-3, 7)
    assert w.n == 12
    assert abs(w.n * (-(math.sqrt(2) - 1)) - w.p) <= 1 / w.n
    assert w.achieved_sup >= 12 * 1e-3 / 8
    assert set(w.u.modes) == {12, -12}
    assert w.u.is_real()


def test_boundary_values():
    w = ins.construct_witness(0.0, SQRT2_ANGLE, 1e-3, 7)
    assert w.u.evaluate(0.5, 0.0) == pytest.approx(1e-3 * 0.5**12, rel=1e-12, abs=0)
    assert w.u.evaluate(0.5, SQRT2_ANGLE) == pytest.approx(2e-3 * 0.5**12, rel=1e-12, abs=0)
    assert w.boundary_error < 1e-10


def test_closed_form_matches_series():
    w = ins.construct_witness(0.4, 0.4 - SQRT2_ANGLE, 2e-3, 7)
    rng = np.random.default_rng(0)
    r, th = rng.uniform(0, 1, 50), rng.uniform(0, 2 * math.pi, 50)
    expected = ins.closed_form(w.theta1, w.theta2, w.n, w.eps, r, th)
    np.testing.assert_allclose(w.u.evaluate(r, th).real, expected, atol=1e-15)
    np.testing.assert_allclose(w.u.evaluate(r, th).imag, 0, atol=1e-15)


def test_sup_brackets_analytic_maximum():
    # max over the circle of |Im(a e^{i psi})| is |a|; the angle n(theta - theta2) = pi/2 gives |Re a|
    for w in ins.witnesses(0.0, SQRT2_ANGLE, 1e-3, 3):
        delta = w.theta1 - w.theta2
        a = 1 - 2 * np.exp(-1j * w.n * delta)
        scale = w.eps / abs(math.sin(w.n * delta))
        assert abs(a.real) * scale * (1 - 1e-12) <= w.achieved_sup <= abs(a) * scale * (1 + 1e-12)


@pytest.mark.parametrize("theta2, expected_n", [(SQRT2_ANGLE, [12, 29, 70]), (GOLDEN_ANGLE, [8, 13, 21])])
def test_amplification_curves(theta2, expected_n):
    curve = ins.amplification_curve(0.0, theta2, 1e-3, 3)
    assert [n for n, _ in curve] == expected_n
    for n, ratio in curve:
        assert ratio >= n / 8


def test_amplification_empty():
    assert ins.amplification_curve(0.0, SQRT2_ANGLE, 1e-3, 0) == []


def test_ratios_oscillate_with_numerator_parity():
    # |1 - 2 e^{-i n delta}| is about 1 or 3 depending on the parity of p, so the
    # amplification is unbounded but not monotone along the convergents
    curve = ins.amplification_curve(0.0, SQRT2_ANGLE, 1e-3, 4)
    assert not ins.strictly_increasing(curve)
    assert curve[-1][1] > curve[0][1]


def test_harmonic_and_mode_pure():
    w = ins.construct_witness(0.0, SQRT2_ANGLE, 1e-3, 7)
    assert helmholtz_residual(w.u, disk_grid(0.5)) < 1e-6
    spec = ins.recovered_spectrum(w, 0.3, 0.3 + 0.7 * SQRT2_ANGLE)
    scale = abs(w.u.coefficient(12))
    for m, c in spec.items():
        if abs(m) == 12:
            assert abs(c - w.u.coefficient(m)) < 1e-6 * scale
        else:
            assert abs(c) < 1e-6 * scale


def test_errors():
    with pytest.raises(DomainError):
        ins.construct_witness(0.0, SQRT2_ANGLE, 1e-3, 6)
    with pytest.raises(DomainError):
        ins.construct_witness(0.0, SQRT2_ANGLE, 0.0, 7)
    with pytest.raises(NoValidPairError):
        ins.construct_witness(0.0, math.pi / 3, 1e-3, 7)


def test_large_order_witness():
    w = ins.witnesses(0.0, SQRT2_ANGLE, 1e-3, 5)[-1]
    assert w.n == 408
    assert w.meets_bound
    assert w.boundary_error < 1e-10
