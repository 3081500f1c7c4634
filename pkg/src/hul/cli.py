"""Command-line entry point.

Every subcommand reads a JSON problem document (``--problem FILE``) whose
fields may be overridden by flags, validates it against a shipped schema,
and writes a result envelope ``{version, command, seed, tolerances, status,
result}``. Exit codes: 0 success, 1 I/O or validation error, 2 an honest
mathematical failure (the status document is still written).

Angles given as strings are multiples of pi: ``"sqrt2m1"`` is pi (sqrt 2 - 1),
``"golden"`` is pi (sqrt 5 - 1)/2, ``"3/7"`` is 3 pi/7 and ``"pi"`` is pi.
Plain numbers are radians.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import diophantine, harmonics_nd, instability, recovery2d, reflections, robin, series2d
from .errors import HulError, MathStatusError, ValidationError

log = logging.getLogger("hul")

FORMAT_VERSION = 1
COMMANDS = ("angles", "expand", "recover", "recover-nd", "robin-solve", "instability", "counterexample", "orbit")
TOLERANCES = {
    "recover": ("det_tol", "noise_tol", "consistency_tol"),
    "recover-nd": ("det_tol", "noise_tol", "consistency_tol"),
    "counterexample": ("quadrature_tol",),
}
OK = "ok"


# -- angles and numbers --------------------------------------------------------------

def parse_ratio(token) -> float:
    """Angle ratio x (angle = pi x) from a number or a symbolic token."""
    if isinstance(token, (int, float)) and not isinstance(token, bool):
        return float(token)
    t = str(token).strip()
    sign = 1.0
    if t.startswith("-"):
        sign, t = -1.0, t[1:]
    if t == "sqrt2m1":
        return sign * (math.sqrt(2.0) - 1.0)
    if t == "golden":
        return sign * (math.sqrt(5.0) - 1.0) / 2.0
    if t == "pi":
        return sign
    try:
        return sign * float(Fraction(t))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"unrecognized angle token {token!r}") from None


def parse_angle(value) -> float:
    """Radians for numbers; pi times the ratio for string tokens."""
    if isinstance(value, str):
        return math.pi * parse_ratio(value)
    return float(value)


def _complex(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


# -- deterministic JSON ------------------------------------------------------------------

def sanitize(obj):
    """Plain JSON types: complex -> [re, im], numpy -> python, non-finite floats -> null."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [sanitize(float(obj.real)), sanitize(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _format_float(x: float) -> str:
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "inf" not in s and "nan" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_format_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# -- schemas ----------------------------------------------------------------------------------

def load_schema(name: str) -> dict:
    text = resources.files("hul").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def _validate(doc, schema_name: str, what: str = "input") -> None:
    schema = load_schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        parts = [str(p) for p in err.absolute_path]
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            known = set(err.schema.get("properties", {}))
            parts.append(sorted(set(err.instance) - known)[0])
        raise ValidationError(f"{what} {err.message}", ".".join(parts) or "<root>")


def validate_output(doc: dict) -> None:
    """Check a result envelope against the schema of its command (or the status schema)."""
    _validate(doc, "status" if "error" in doc else f"{doc['command']}.output", "output")


# -- subcommand handlers --------------------------------------------------------------------
# each returns (status, result, csv_view) with csv_view = (header, rows) or None

def _rng(doc) -> np.random.Generator:
    return np.random.default_rng(doc.get("seed"))


def run_angles(doc, tol):
    x = parse_ratio(doc["x"])
    report = diophantine.continued_fraction(x, doc.get("depth", diophantine.DEFAULT_DEPTH))
    bad = diophantine.badly_approximable(x, doc.get("c", 3.0), doc.get("k_max", 10**4))
    result = {
        "report": report.to_dict(),
        "badly_approximable": dict(bad.__dict__),
    }
    rows = [(i, p, q) for i, (p, q) in enumerate(report.convergents)]
    return OK, result, (["index", "p", "q"], rows)


def _series_doc_2d(doc, rng, k: float) -> series2d.PolarSeries:
    spec = doc["series"]
    if "random" in spec:
        top = spec["random"]["max_mode"]
        modes = {m: complex(*rng.normal(size=2)) for m in range(-top, top + 1)}
        return series2d.PolarSeries(k, modes)
    return series2d.PolarSeries.from_dict({"k": spec.get("k", k), "modes": spec["modes"]})


def _grid(doc) -> np.ndarray:
    g = doc.get("grid", {})
    if "points" in doc:
        return np.asarray(doc["points"], dtype=float).reshape(-1, 2)
    return series2d.disk_grid(g.get("radius", 0.5), g.get("n_r", 8), g.get("n_theta", 16))


def run_expand(doc, tol):
    s = _series_doc_2d(doc, _rng(doc), doc["series"].get("k", 0.0))
    pts = _grid(doc)
    samples = series2d.field_samples(s, pts)
    result = {
        "series": s.to_dict(),
        "samples": samples,
        "helmholtz_residual": series2d.helmholtz_residual(s, pts),
    }
    return OK, result, (["x", "y", "re", "im"], samples.tolist())


def _profile(doc):
    p = doc.get("profile", "laplace")
    if isinstance(p, dict):
        return ("helmholtz", float(p["helmholtz"])), float(p["helmholtz"])
    return "laplace", 0.0


def _curve(c) -> series2d.CurveSpec:
    theta = c["theta"]
    coeffs = [parse_angle(theta)] if not isinstance(theta, list) else [parse_angle(theta[0])] + [float(v) for v in theta[1:]]
    return series2d.CurveSpec(tuple(coeffs), c.get("r_max", 1.0))


def _robin(c):
    if "robin" not in c:
        return None
    r = c["robin"]
    return recovery2d.RobinSpec(tuple(r["alpha"]), tuple(r.get("beta", [0.0])), tuple(r.get("betatilde", [0.0])))


def run_recover(doc, tol):
    profile, k = _profile(doc)
    curves = [_curve(c) for c in doc["curves"]]
    conds = [(c["condition"], _robin(c)) for c in doc["curves"]]
    if "traces" in doc:
        traces = []
        for j, (t, curve, (cond, rb)) in enumerate(zip(doc["traces"], curves, conds)):
            r = np.asarray(t["r"], dtype=float)
            vals = np.array([_complex(v) for v in t["values"]])
            if len(vals) != len(r):
                raise ValidationError("values and r differ in length", f"traces.{j}.values")
            order = np.argsort(r)[::-1]
            traces.append(recovery2d.TraceData(curve, cond, r[order], vals[order], rb))
        truth = None
    else:
        truth = _series_doc_2d(doc, _rng(doc), k)
        rd = doc.get("radii", {})
        r = recovery2d.default_radii(rd.get("r_max", 0.5), rd.get("count", 64))
        traces = [recovery2d.make_trace(truth, curve, cond, r, rb) for curve, (cond, rb) in zip(curves, conds)]
    origin = _complex(doc["origin_value"]) if "origin_value" in doc else None
    if origin is None and truth is not None and all(c[0] != recovery2d.DIRICHLET for c in conds):
        origin = complex(truth.evaluate(0.0, 0.0))
    res = recovery2d.recover(traces[0], traces[1], profile, doc["N"], origin_value=origin, **tol)
    out = res.to_dict()
    if truth is not None:
        keys = set(truth.modes) | set(res.recovered.modes)
        keys = [m for m in keys if abs(m) <= doc["N"]]
        scale = max([abs(truth.coefficient(m)) for m in keys] + [1e-300])
        out["relative_error"] = max(abs(res.recovered.coefficient(m) - truth.coefficient(m)) for m in keys) / scale
    samples = series2d.field_samples(res.recovered, series2d.disk_grid(0.5))
    status = OK if res.complete else res.status
    return status, out, (["x", "y", "re", "im"], samples.tolist())


def run_recover_nd(doc, tol):
    d, k, N = doc["d"], float(doc.get("k", 0.0)), doc["N"]
    rng = _rng(doc)
    spec = doc["series"]
    if "random" in spec:
        deg = spec["random"]["degree"]
        terms = {idx.alpha: complex(*rng.normal(size=2)) for n in range(deg + 1) for idx in harmonics_nd.basis_indices(d, n)}
    else:
        terms = {}
        for a, re, im in spec["terms"]:
            terms[tuple(a)] = terms.get(tuple(a), 0) + complex(re, im)
    truth = harmonics_nd.NDSeries(d, k, terms)
    th = harmonics_nd.theta_grid(d, doc.get("theta_per_axis", 24 if d == 3 else 8))
    rd = doc.get("radii", {})
    r = np.linspace(1e-3, rd.get("r_max", 0.5), rd.get("count", 48))
    surfaces = [harmonics_nd.HypersurfaceSpec.affine(th, parse_angle(s["phi0"]), s.get("slope", 0.0))
                for s in doc["surfaces"]]
    t1, t2 = (harmonics_nd.make_nd_trace(truth, s, r) for s in surfaces)
    res = harmonics_nd.recover_nd(t1, t2, k=k, N=N, **tol)
    out = res.to_dict()
    keys = [a for a in set(truth.terms) | set(res.recovered.terms) if harmonics_nd.HarmonicIndex(a).degree <= N]
    scale = max([abs(truth.coefficient(a)) for a in keys] + [1e-300])
    out["relative_error"] = max([abs(res.recovered.coefficient(a) - truth.coefficient(a)) for a in keys] + [0.0]) / scale
    # field dump on a small spherical grid at radius 1/2
    ph = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    tg = harmonics_nd.theta_grid(d, 4)
    T = np.repeat(tg, len(ph), axis=0)
    P = np.tile(ph, len(tg))
    x = harmonics_nd.spherical_to_cartesian(d, 0.5, T, P)
    u = res.recovered.evaluate(0.5, T, P)
    rows = np.column_stack([x, u.real, u.imag]).tolist()
    header = [f"x{i + 1}" for i in range(d)] + ["re", "im"]
    return (OK if res.complete else res.status), out, (header, rows)


def run_robin_solve(doc, tol):
    a, b = doc["alpha"], doc["beta"]
    p = robin.RobinLineProblem(float(doc["k"]), parse_angle(doc.get("theta1", 0.0)), parse_angle(doc["theta2"]),
                               float(a[0]), float(a[1]), float(b[0]), float(b[1]))
    M = doc["M"]
    radius = doc.get("radius", robin.DEFAULT_RADIUS)
    sol = robin.build_robin_solution(p, M, radius)
    cert = robin.dimension_certificate(p, M, radius, doc.get("c", robin.DEFAULT_BAD_APPROX_C),
                                       doc.get("k_max", robin.DEFAULT_K_MAX))
    r = np.linspace(0.01, radius, 40)
    bres = {key: float(np.max(v)) for key, v in robin.boundary_residuals(sol, r).items()}
    result = {
        "solution": sol.to_dict(),
        "recursion_residual": max(robin.recursion_residuals(p, {m: sol.coefficient(m) for m in range(-M, M + 1)}, M),
                                  default=0.0),
        "boundary_residuals": bres,
        "certificate": cert.to_dict(),
    }
    rows = [(g.m, g.abs_c_plus, g.abs_c_minus, g.bound) for g in sol.growth_log]
    return OK, result, (["m", "abs_c_plus", "abs_c_minus", "bound"], rows)


def run_instability(doc, tol):
    theta1 = parse_angle(doc.get("theta1", 0.0))
    if "theta2_ratio" in doc:
        theta2 = math.pi * parse_ratio(doc["theta2_ratio"])
    else:
        theta2 = parse_angle(doc["theta2"])
    ws = instability.witnesses(theta1, theta2, float(doc["eps"]), doc["count"], doc.get("n_min", instability.N_MIN_FLOOR))
    items = [{k: v for k, v in w.to_dict().items() if k != "series"} | {"meets_bound": w.meets_bound} for w in ws]
    curve = [(w.n, w.ratio) for w in ws]
    result = {
        "theta1": theta1,
        "theta2": theta2,
        "witnesses": items,
        "strictly_increasing": instability.strictly_increasing(curve),
    }
    rows = [(w.n, w.p, w.achieved_sup, w.bound) for w in ws]
    return OK, result, (["n", "p", "sup", "bound"], rows)


def _lines(doc, d):
    lines = doc["lines"]
    if isinstance(lines, dict):
        v = _rng(doc).normal(size=(lines["random"], d))
        return v / np.linalg.norm(v, axis=1)[:, None]
    arr = np.asarray(lines, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValidationError(f"each line must be a {d}-vector", "lines")
    return arr


def run_counterexample(doc, tol):
    d = doc["d"]
    lines = _lines(doc, d)
    out = harmonics_nd.counterexample(d, lines, doc.get("m"), float(doc.get("k", 0.0)),
                                      quadrature_tol=tol.get("quadrature_tol", harmonics_nd.QUAD_TOL))
    out["lines"] = lines
    rows = [(*a, c[0], c[1]) for a, c in ((tuple(e[0]), (e[1], e[2])) for e in out["harmonic"]["coefficients"])]
    header = [f"alpha{i + 1}" for i in range(d - 1)] + ["re", "im"]
    return OK, out, (header, rows)


def run_orbit(doc, tol):
    if "normals" in doc:
        pair = reflections.ReflectionPair(np.asarray(doc["normals"][0], float), np.asarray(doc["normals"][1], float))
    else:
        pair = reflections.ReflectionPair.planar(parse_angle(doc["eta"]), doc.get("d", 2))
    x0 = np.asarray(doc.get("x0", [1.0] + [0.0] * (pair.d - 1)), dtype=float)
    bins = doc.get("bins", reflections.DEFAULT_BINS)
    rep = reflections.density_report(pair, x0, doc["iterations"], bins)
    result = rep.to_dict() | {"eta": pair.eta}
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    rows = [(i, edges[i], edges[i + 1], int(c)) for i, c in enumerate(rep.counts)]
    return OK, result, (["bin", "angle_lo", "angle_hi", "count"], rows)


HANDLERS = {
    "angles": run_angles,
    "expand": run_expand,
    "recover": run_recover,
    "recover-nd": run_recover_nd,
    "robin-solve": run_robin_solve,
    "instability": run_instability,
    "counterexample": run_counterexample,
    "orbit": run_orbit,
}


# -- argument parsing ---------------------------------------------------------------------------

def _number_or_token(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _json_file(text: str):
    try:
        doc = json.loads(Path(text).read_text())
    except OSError as exc:
        raise argparse.ArgumentTypeError(f"cannot read {text}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"{text} is not valid JSON: {exc}") from None
    return doc["lines"] if isinstance(doc, dict) and "lines" in doc else doc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message, "argv")


# (flag, document field, type)
FLAGS = {
    "angles": [("--x", "x", _number_or_token), ("--depth", "depth", int), ("--c", "c", float), ("--k-max", "k_max", int)],
    "expand": [],
    "recover": [("--N", "N", int)],
    "recover-nd": [("--N", "N", int), ("--d", "d", int), ("--k", "k", float)],
    "robin-solve": [("--k", "k", float), ("--theta1", "theta1", _number_or_token), ("--theta2", "theta2", _number_or_token),
                    ("--alpha", "alpha", _float_list), ("--beta", "beta", _float_list), ("--M", "M", int),
                    ("--radius", "radius", float)],
    "instability": [("--theta1", "theta1", _number_or_token), ("--theta2", "theta2", _number_or_token),
                    ("--theta2-ratio", "theta2_ratio", _number_or_token), ("--eps", "eps", float),
                    ("--count", "count", int), ("--n-min", "n_min", int)],
    "counterexample": [("--d", "d", int), ("--lines", "lines", _json_file), ("--m", "m", int), ("--k", "k", float)],
    "orbit": [("--eta", "eta", _number_or_token), ("--d", "d", int), ("--x0", "x0", _float_list),
              ("--iterations", "iterations", int), ("--bins", "bins", int)],
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--problem", type=Path, help="JSON problem document")
    common.add_argument("-o", "--out", type=Path, help="output directory")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format without --out")
    parser = _Parser(prog="hul", description="Uniqueness and non-uniqueness experiments for Laplace/Helmholtz data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        for flag, dest, typ in FLAGS[name]:
            sp.add_argument(flag, dest=f"field_{dest}", type=typ)
    return parser


def _parse_tolerances(command: str, items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"expected NAME=VALUE, got {item!r}", "tol")
        try:
            out[name] = float(value)
        except ValueError:
            raise ValidationError(f"not a number: {value!r}", f"tolerances.{name}") from None
    return out


def build_document(args) -> dict:
    doc: dict = {}
    if args.problem is not None:
        doc = json.loads(args.problem.read_text())
        if not isinstance(doc, dict):
            raise ValidationError("problem document must be a JSON object", "<root>")
    for key, value in vars(args).items():
        if key.startswith("field_") and value is not None:
            doc[key[len("field_"):]] = value
    doc.setdefault("version", FORMAT_VERSION)
    if args.seed is not None:
        doc["seed"] = args.seed
    tol = _parse_tolerances(args.command, args.tol)
    if tol:
        doc["tolerances"] = {**doc.get("tolerances", {}), **tol}
    return doc


def _tolerances(command: str, doc: dict) -> dict[str, float]:
    tol = doc.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ValidationError("must be an object", "tolerances")
    allowed = TOLERANCES.get(command, ())
    for name in tol:
        if name not in allowed:
            raise ValidationError(f"unknown tolerance for {command} (allowed: {', '.join(allowed) or 'none'})",
                                  f"tolerances.{name}")
    return dict(tol)


def execute(command: str, doc: dict) -> tuple[int, dict, tuple | None]:
    """Validate ``doc``, run the command and return (exit code, envelope, csv view)."""
    tol = _tolerances(command, doc)
    _validate(doc, f"{command}.input")
    envelope = {"version": FORMAT_VERSION, "command": command, "seed": doc.get("seed"), "tolerances": tol}
    try:
        status, result, view = HANDLERS[command](doc, tol)
    except MathStatusError as exc:
        log.info("%s: %s", command, exc)
        envelope |= {"status": exc.status, "error": exc.to_status()}
        envelope = sanitize(envelope)
        validate_output(envelope)
        return 2, envelope, None
    envelope |= {"status": status, "result": result}
    envelope = sanitize(envelope)
    validate_output(envelope)
    return (0 if status == OK else 2), envelope, view


def _configure_logging() -> None:
    level = os.environ.get("HUL_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=int(level) if level.isdigit() else getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
        doc = build_document(args)
        code, envelope, view = execute(args.command, doc)
    except ValidationError as exc:
        print(f"hul: validation error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"hul: {exc}", file=sys.stderr)
        return 1
    except HulError as exc:
        print(f"hul: {exc}", file=sys.stderr)
        return 1
    text = dumps(envelope) + "\n"
    csv_text = to_csv(*view) if view is not None else None
    try:
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"{args.command}.json").write_text(text)
            if csv_text is not None:
                (args.out / f"{args.command}.csv").write_text(csv_text)
            log.info("wrote %s", args.out)
        elif args.format == "csv" and csv_text is not None:
            sys.stdout.write(csv_text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"hul: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
