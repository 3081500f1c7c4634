import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hul import harmonics_nd as H
from hul.errors import DegreeTooSmallError, DomainError, GridError

FD_STEP = 2.5e-4
ETA = math.pi * (math.sqrt(2) - 1)


def unit(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1)[:, None]


def random_series(rng, d, k, degree):
    terms = {idx.alpha: complex(*rng.normal(size=2)) for n in range(degree + 1) for idx in H.basis_indices(d, n)}
    return H.NDSeries(d, k, terms)


def rel_error(a: H.NDSeries, b: H.NDSeries) -> float:
    keys = set(a.terms) | set(b.terms)
    scale = max(abs(c) for c in b.terms.values())
    return max(abs(a.coefficient(k) - b.coefficient(k)) for k in keys) / scale


# -- coordinates --------------------------------------------------------------------

def test_north_pole_and_equator():
    assert np.allclose(H.spherical_to_cartesian(3, 1.0, [0.0], 1.234), [0, 0, 1])
    assert np.allclose(H.spherical_to_cartesian(3, 1.0, [math.pi / 2], 0.0), [1, 0, 0])


def test_d4_components():
    r, t1, t2, phi = 2.0, 0.3, 1.1, 0.7
    x = H.spherical_to_cartesian(4, r, [t1, t2], phi)
    want = [r * math.sin(t2) * math.sin(t1) * math.cos(phi), r * math.sin(t2) * math.sin(t1) * math.sin(phi),
            r * math.sin(t2) * math.cos(t1), r * math.cos(t2)]
    assert np.allclose(x, want, atol=1e-15)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_roundtrip(d):
    rng = np.random.default_rng(d)
    for _ in range(50):
        r = rng.uniform(0.1, 3)
        th = rng.uniform(0.05, math.pi - 0.05, d - 2)
        ph = rng.uniform(0, 2 * math.pi)
        p = H.cartesian_to_spherical(H.spherical_to_cartesian(d, r, th, ph))
        assert not p.degenerate
        assert abs(p.r - r) < 1e-12 and np.max(np.abs(np.array(p.theta) - th)) < 1e-12
        assert abs((p.phi - ph + math.pi) % (2 * math.pi) - math.pi) < 1e-12


def test_degenerate_points_flagged():
    assert H.cartesian_to_spherical([0, 0, 2.0]).degenerate
    assert H.cartesian_to_spherical([0, 0, 0, 0]).degenerate
    p = H.cartesian_to_spherical([0, 0, 0, -1.0])
    assert p.degenerate and abs(p.theta[-1] - math.pi) < 1e-15


# -- basis ----------------------------------------------------------------------------

def test_degree_zero_is_one():
    for d in (3, 4, 5):
        idx = H.HarmonicIndex((0,) * (d - 1))
        th = np.random.default_rng(0).uniform(0, math.pi, (10, d - 2))
        assert np.allclose(H.evaluate_Y(idx, 1.7, th, 0.4), 1.0)


def test_sin_theta_e_iphi():
    idx = H.HarmonicIndex((0, 1))
    th = np.linspace(0, math.pi, 9)[:, None]
    vals = H.evaluate_Y(idx, 2.0, th, 0.3)
    assert np.allclose(vals, 2.0 * np.sin(th[:, 0]) * np.exp(0.3j))
    assert abs(vals[0]) < 1e-15 and abs(vals[-1]) < 1e-15


def test_index_invariants():
    idx = H.HarmonicIndex((2, 1, -3))
    assert idx.degree == 6 and idx.tail(2) == 4 and idx.tail(3) == 3
    assert idx.lam(1) == 4 + 1.0 and idx.lam(2) == 3 + 0.5
    with pytest.raises(DomainError):
        H.HarmonicIndex((-1, 2))


@pytest.mark.parametrize("d", [3, 4])
def test_fd_laplacian_random_indices(d):
    rng = np.random.default_rng(10 + d)
    pool = [idx for n in range(6) for idx in H.basis_indices(d, n)]
    sphere = unit(rng, 2000, d)
    for i in rng.choice(len(pool), 20, replace=False):
        idx = pool[i]
        scale = np.max(np.abs(H.evaluate_Y_cartesian(idx, sphere)))
        x = unit(rng, 6, d) * rng.uniform(0.2, 1.0, (6, 1))
        res = H.fd_laplacian(lambda p: H.evaluate_Y_cartesian(idx, p) / scale, x, FD_STEP)
        assert np.max(np.abs(res)) < 1e-5, idx


def test_enumeration_order():
    got = [idx.alpha for idx in H.basis_indices(3, 2)]
    assert got == [(0, 2), (0, -2), (1, 1), (1, -1), (2, 0)]
    assert [idx.alpha for idx in H.basis_indices(3, 1)] == [(0, 1), (0, -1), (1, 0)]


@pytest.mark.parametrize("d,m,want", [(3, 0, 1), (4, 0, 1), (3, 5, 11), (4, 2, 9), (5, 3, 30), (2, 3, 2)])
def test_dim_harmonics(d, m, want):
    assert H.dim_harmonics(d, m) == want
    if d >= 3:
        assert len(H.basis_indices(d, m)) == want


@given(st.integers(3, 7), st.integers(0, 7))
def test_dim_matches_enumeration(d, m):
    assert H.dim_harmonics(d, m) == len(H.basis_indices(d, m)) >= 2 * m + 1


@pytest.mark.parametrize("d", [3, 4])
def test_gram_condition(d):
    grid = H.theta_grid(d, 16)
    for n in range(7):
        assert H.gram_condition(d, n, grid) < 1e6


def test_series_serialization_roundtrip():
    s = random_series(np.random.default_rng(1), 4, 1.0, 2)
    assert H.NDSeries.from_dict(s.to_dict()) == s


def test_series_matches_cartesian_eval():
    rng = np.random.default_rng(2)
    s = random_series(rng, 3, 0.0, 3)
    x = rng.normal(size=(5, 3))
    direct = sum(c * H.evaluate_Y_cartesian(H.HarmonicIndex(a), x) for a, c in s.terms.items())
    assert np.allclose(s.evaluate_cartesian(x), direct)


def test_helmholtz_series_fd():
    rng = np.random.default_rng(3)
    s = random_series(rng, 3, 1.0, 3)
    x = unit(rng, 6, 3) * 0.6
    lap = H.fd_laplacian(s.evaluate_cartesian, x, FD_STEP)
    assert np.max(np.abs(lap + s.evaluate_cartesian(x))) < 1e-5


def test_radial_factor_limit_at_origin():
    r = np.array([0.0, 1e-8])
    g = H.radial_factor(3, 1.0, 0, r)
    assert abs(g[0] - g[1]) < 1e-12  # r^{-1/2} J_{1/2}(r) -> sqrt(2/pi)
    assert abs(g[0] - math.sqrt(2 / math.pi)) < 1e-15


# -- recovery ----------------------------------------------------------------------

def _traces(s, slope=0.05, phi2=ETA):
    th = H.theta_grid(3, 24)
    r = np.linspace(1e-3, 0.5, 48)
    return (H.make_nd_trace(s, H.HypersurfaceSpec.affine(th, 0.0), r),
            H.make_nd_trace(s, H.HypersurfaceSpec.affine(th, phi2, slope), r))


@pytest.mark.parametrize("k", [0.0, 1.0])
def test_recover_nd_roundtrip(k):
    rng = np.random.default_rng(int(10 * k) + 5)
    s = random_series(rng, 3, k, 3)
    res = H.recover_nd(*_traces(s), k=k, N=3)
    assert res.complete
    assert rel_error(res.recovered, s) < 1e-6


def test_recover_nd_zero():
    s = H.NDSeries(3, 0.0, {})
    res = H.recover_nd(*_traces(s), N=3)
    assert res.complete and res.recovered.terms == {}


def test_recover_nd_small_denominator():
    s = H.NDSeries(3, 0.0, {(0, 2): 1.0, (1, 0): 0.5})
    res = H.recover_nd(*_traces(s, slope=0.0, phi2=math.pi / 2), N=3)
    assert res.status == H.ABORTED_SMALL_DENOMINATOR and res.aborted_at == (2, 2)


def test_recover_nd_grid_error():
    th = np.full((4, 1), 0.7)  # all samples share one angle: Y~ columns are dependent
    s = H.NDSeries(3, 0.0, {(0, 1): 1.0})
    r = np.linspace(0.01, 0.5, 8)
    t1 = H.make_nd_trace(s, H.HypersurfaceSpec.affine(th, 0.0), r)
    t2 = H.make_nd_trace(s, H.HypersurfaceSpec.affine(th, ETA), r)
    with pytest.raises(GridError):
        H.recover_nd(t1, t2, N=2)


def test_hypersurface_phi0_invariant():
    th = H.theta_grid(3, 4)
    with pytest.raises(DomainError):
        H.HypersurfaceSpec(th, np.vstack([np.linspace(0, 1, 4), np.zeros(4)]))
    s = H.HypersurfaceSpec.from_function(th, [lambda t: 0.3, lambda t: np.cos(t[:, 0])])
    assert s.phi0 == 0.3


# -- null space ----------------------------------------------------------------------

def test_rref_rank():
    a = np.array([[1, 2, 3], [2, 4, 6], [1, 0, 1]], dtype=float)
    red, piv = H.rref(a)
    assert piv == [0, 1]
    ns = H.nullspace(a)
    assert ns.shape == (3, 1) and np.allclose(a @ ns, 0)


def test_pole_nullspace_is_sin_e_iphi():
    Y = H.nullspace_harmonic(3, [[0.0, 0.0, 1.0]], 1)
    assert list(Y.coefficients) == [(0, 1)]
    assert Y.null_dim == 2 and Y.vanishing < 1e-10


def test_degree_too_small():
    lines = unit(np.random.default_rng(4), 3, 3)
    with pytest.raises(DegreeTooSmallError):
        H.nullspace_harmonic(3, lines, 1)


def test_null_dimension_bound():
    lines = unit(np.random.default_rng(5), 3, 3)
    Y = H.nullspace_harmonic(3, lines, 4)
    assert Y.dim == 9 and Y.null_dim >= 9 - 6
    # Y(-x) = (-1)^m Y(x): the antipodal rows repeat, so only N constraints are independent
    assert Y.rank == 3


@pytest.mark.parametrize("k", [0.0, 1.0])
def test_extension_vanishes_on_lines(k):
    rng = np.random.default_rng(6)
    lines = unit(rng, 2, 3)
    Y = H.nullspace_harmonic(3, lines, H.minimal_degree(3, 2))
    u = Y.extension(k)
    r = np.linspace(-2, 2, 20)
    pts = (r[:, None, None] * lines[None, :, :]).reshape(-1, 3)
    assert np.max(np.abs(u.evaluate_cartesian(pts))) < 1e-10
    off = unit(rng, 5, 3)
    assert np.max(np.abs(u.evaluate_cartesian(off))) > 1e-3


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_nullspace_vanishes(seed, N):
    lines = unit(np.random.default_rng(seed), N, 3)
    m = H.minimal_degree(3, N)
    Y = H.nullspace_harmonic(3, lines, m)
    assert Y.vanishing < 1e-10 and Y.null_dim >= Y.dim - 2 * N


def test_minimal_degree():
    assert [H.minimal_degree(3, N) for N in (1, 2, 3)] == [1, 2, 3]
    assert H.minimal_degree(4, 2) == 2


def test_real_part_stays_in_nullspace():
    Y = H.nullspace_harmonic(3, [[0.0, 0.0, 1.0]], 1)
    R = Y.real_part()
    assert R.is_real() and R.vanishing < 1e-12
    th = np.linspace(0, math.pi, 7)[:, None]
    assert np.allclose(R.evaluate(th, 0.4), np.sin(th[:, 0]) * math.cos(0.4))


# -- measure pair ------------------------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3])
def test_measure_pair(N):
    lines = unit(np.random.default_rng(20 + N), N, 3)
    Y = H.nullspace_harmonic(3, lines, H.minimal_degree(3, N))
    rep = H.measure_pair_check(Y)
    assert rep.max_line_difference < 1e-6
    assert rep.min_density >= 0
    assert all(abs(mass - 4 * math.pi) < 1e-8 for mass in rep.masses)
    assert rep.ratio_spread < 1e-4
    assert rep.resolution_change < 1e-7
    assert abs(rep.fitted_constant - rep.funk_hecke_constant) < 1e-8 * abs(rep.funk_hecke_constant)


def test_measure_pair_d4_out_of_scope():
    Y = H.nullspace_harmonic(4, [[0, 0, 0, 1.0]], 1)
    with pytest.raises(DomainError):
        H.measure_pair_check(Y)
