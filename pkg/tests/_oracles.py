"""Forward/backward helpers shared by the recovery tests and the acceptance suite."""

import math


from hul.recovery2d import RobinSpec, default_radii, make_trace, recover
from hul.series2d import CurveSpec, PolarSeries

ETA = math.pi * (math.sqrt(2) - 1)
RADII = default_radii(1.0)
CONDITIONS = {"DD": ("dirichlet", "dirichlet"), "DN": ("dirichlet", "neumann_angular"), "RR": ("robin", "robin")}


def random_series(rng, k, n=6):
    return PolarSeries(k, {m: complex(*rng.normal(size=2)) for m in range(-n, n + 1)})


def random_robin(rng):
    return RobinSpec(tuple(rng.normal(size=2)), tuple(rng.normal(size=2)), tuple(rng.normal(size=2)))


def roundtrip(rng, k, case, curved=False, n=6, eta=ETA):
    """One random trial; returns (status label, max relative coefficient error)."""
    s = random_series(rng, k, n)
    c1 = CurveSpec((0.0, 0.2, -0.1)) if curved else CurveSpec.ray(0.0)
    c2 = CurveSpec((eta, 0.05)) if curved else CurveSpec.ray(eta)
    cond1, cond2 = CONDITIONS[case]
    rob1 = random_robin(rng) if cond1 == "robin" else None
    rob2 = random_robin(rng) if cond2 == "robin" else None
    t1 = make_trace(s, c1, cond1, RADII, rob1)
    t2 = make_trace(s, c2, cond2, RADII, rob2)
    origin = s.coefficient(0) if case == "RR" else None
    res = recover(t1, t2, ("helmholtz", k), n, origin_value=origin)
    scale = max(abs(c) for c in s.modes.values())
    err = max(abs(res.recovered.coefficient(m) - s.coefficient(m)) for m in range(-n, n + 1)) / scale
    return res.status_label(), err
