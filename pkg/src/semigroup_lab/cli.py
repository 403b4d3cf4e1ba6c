"""Batch front-end: ``semigroup-lab <classify|duals|kernel|spectrum|verify> --config FILE``.

Exit codes: 0 success, 1 a verification check failed, 2 the config could not be
parsed or validated or an analysis raised.
"""

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError, SemigroupLabError, ValidationError
from .grid import GridSpec
from .rkhs import (
    check_intertwining,
    check_psd,
    diagonal_orthogonality,
    evaluate_kernel,
    four_factor_coefficient,
    kernel_coefficients,
    sample_polydisc,
    spherical_model_condition,
)
from .spectrum import (
    adjoint_eigenfunction,
    check_circular_symmetry,
    check_kernel_density,
    check_no_point_spectrum,
    min_singular_value,
    polydisc_bounds,
    power_norm_table,
)
from .symbol import SymbolSpec, classify_symbol
from .tuples import (
    TranslationTuple,
    box,
    check_analytic,
    check_kernel_condition,
    check_orthogonality,
    check_wandering,
    classify,
    joint_kernel,
    spherical_cauchy_dual,
    toral_cauchy_dual,
    toral_defect,
)

SCHEMA_VERSION = 1
ANALYSES = ("classify", "duals", "kernel", "spectrum", "verify-all")
SUBCOMMANDS = {"classify": "classify", "duals": "duals", "kernel": "kernel",
               "spectrum": "spectrum", "verify": "verify-all"}
DEFAULT_GRID = {"h": 0.25, "x_max": 64.0}
DEFAULT_PARAMETERS = {
    "maxOrder": 8,
    "latticeN": 16,
    "kmax": 32,
    "tol": 1e-10,
    "psd_samples": 8,
    "theta_list": None,  # None: five seeded random angles
    "rho": 0.5,  # kernel evaluation point, relative to the inner radius
    "seed": 0,
    "alphaMax": 3,
    "radius": 3,
    "intertwineN": 4,
    "lambdaSamples": 10,
}
_TOP_KEYS = {"grid", "tuple", "tuples", "analyses", "parameters", "output"}
_DENSE_SPECTRUM_LIMIT = 1024


@dataclass(frozen=True)
class TupleConfig:
    name: str
    symbols: tuple
    t: tuple
    scale: tuple = None

    def build(self, grid, tol):
        return TranslationTuple(self.symbols, self.t, grid, self.scale, tol=max(tol, 1e-10))

    def echo(self):
        out = {"name": self.name, "symbols": [s.to_dict() for s in self.symbols], "t": list(self.t)}
        if self.scale is not None:
            out["scale"] = list(self.scale)
        return out


@dataclass(frozen=True)
class AnalysisConfig:
    grid: GridSpec
    tuples: tuple
    analyses: tuple
    parameters: dict
    output: dict = field(default_factory=dict)

    def echo(self):
        return {
            "grid": {"h": self.grid.h, "x_max": self.grid.x_max},
            "tuples": [tc.echo() for tc in self.tuples],
            "analyses": list(self.analyses),
            "parameters": dict(self.parameters),
            "output": dict(self.output),
        }


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _number(value, name, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(f"expected a finite number, got {value!r}", field=name)
    if positive and not value > 0:
        raise ValidationError(f"must be > 0, got {value}", field=name)
    return float(value)


def _parse_tuple(record, index, grid):
    where = f"tuples[{index}]"
    if not isinstance(record, dict):
        raise ValidationError("expected an object", field=where)
    unknown = set(record) - {"name", "symbols", "t", "scale"}
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)}", field=where)
    symbols = record.get("symbols")
    t = record.get("t")
    if not isinstance(symbols, list) or not symbols:
        raise ValidationError("needs a non-empty 'symbols' list", field=f"{where}.symbols")
    if not isinstance(t, list) or len(t) != len(symbols):
        raise ValidationError("'t' must list one translation per symbol", field=f"{where}.t")
    try:
        specs = tuple(SymbolSpec.from_dict(s) for s in symbols)
    except ValidationError as exc:
        raise ValidationError(str(exc), field=f"{where}.symbols", kind=exc.kind) from exc
    except SemigroupLabError as exc:
        raise ValidationError(str(exc), field=f"{where}.symbols", kind=type(exc).__name__) from exc
    ts = tuple(_number(v, f"{where}.t", positive=True) for v in t)
    for v in ts:
        try:
            grid.steps(v)
        except SemigroupLabError as exc:
            raise ValidationError(str(exc), field=f"{where}.t", kind=type(exc).__name__) from exc
    for s in specs:
        try:
            s.on_grid(grid)
        except SemigroupLabError as exc:
            raise ValidationError(str(exc), field=f"{where}.symbols", kind=type(exc).__name__) from exc
    scale = record.get("scale")
    if scale is not None:
        if not isinstance(scale, list) or len(scale) != len(ts):
            raise ValidationError("'scale' must list one factor per symbol", field=f"{where}.scale")
        scale = tuple(_number(v, f"{where}.scale", positive=True) for v in scale)
    name = record.get("name", f"tuple{index}")
    if not isinstance(name, str) or not name:
        raise ValidationError("name must be a non-empty string", field=f"{where}.name")
    return TupleConfig(name, specs, ts, scale)


def parse_config(text):
    """Validate JSON config text into an :class:`AnalysisConfig`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(raw, dict):
        raise ParseError("config must be a JSON object", line=1, column=1)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}", field="config")

    g = raw.get("grid", {})
    if not isinstance(g, dict):
        raise ValidationError("expected an object", field="grid")
    h = _number(g.get("h", DEFAULT_GRID["h"]), "grid.h", positive=True)
    x_max = _number(g.get("x_max", DEFAULT_GRID["x_max"]), "grid.x_max", positive=True)
    grid = GridSpec.from_extent(h, x_max)

    if ("tuple" in raw) == ("tuples" in raw):
        raise ValidationError("give exactly one of 'tuple' or 'tuples'", field="tuple")
    records = [raw["tuple"]] if "tuple" in raw else raw["tuples"]
    if not isinstance(records, list) or not records:
        raise ValidationError("expected a non-empty list", field="tuples")
    tuples = tuple(_parse_tuple(r, i, grid) for i, r in enumerate(records))
    names = [tc.name for tc in tuples]
    if len(set(names)) != len(names):
        raise ValidationError("tuple names must be unique", field="tuples")

    analyses = raw.get("analyses", [])
    if not isinstance(analyses, list) or any(a not in ANALYSES for a in analyses):
        raise ValidationError(f"analyses must be a subset of {list(ANALYSES)}", field="analyses")

    params = dict(DEFAULT_PARAMETERS)
    given = raw.get("parameters", {})
    if not isinstance(given, dict):
        raise ValidationError("expected an object", field="parameters")
    for key, value in given.items():
        if key not in DEFAULT_PARAMETERS:
            raise ValidationError(f"unknown parameter {key!r}", field="parameters")
        params[key] = value
    for key in ("maxOrder", "latticeN", "kmax", "psd_samples", "seed", "alphaMax", "radius",
                "intertwineN", "lambdaSamples"):
        value = params[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValidationError("expected a non-negative integer", field=f"parameters.{key}")
    if params["kmax"] < 4:
        raise ValidationError("kmax must be >= 4", field="parameters.kmax")
    params["tol"] = _number(params["tol"], "parameters.tol", positive=True)
    params["rho"] = _number(params["rho"], "parameters.rho", positive=True)
    if params["rho"] >= 1:
        raise ValidationError("rho is relative to the inner radius and must be < 1", field="parameters.rho")
    if params["theta_list"] is not None:
        if not isinstance(params["theta_list"], list):
            raise ValidationError("expected a list of angles", field="parameters.theta_list")
        params["theta_list"] = [_number(v, "parameters.theta_list") for v in params["theta_list"]]

    output = raw.get("output", {})
    if not isinstance(output, dict) or set(output) - {"format", "path"}:
        raise ValidationError("output takes 'format' and 'path'", field="output")
    if output.get("format", "json") not in ("json", "csv"):
        raise ValidationError("format must be json or csv", field="output.format")
    return AnalysisConfig(grid, tuples, tuple(analyses), params, dict(output))


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------

class _Outcome:
    """Per-tuple result accumulator: JSON payload, CSV tables and failed checks."""

    def __init__(self):
        self.data = {}
        self.tables = {}
        self.failures = []

    def check(self, name, passed):
        if not passed:
            self.failures.append(name)
        return bool(passed)


def _rng(params, *salt):
    return np.random.default_rng([params["seed"], *salt])


def _lattice_bound(tt, want):
    """Largest ``N <= want`` with ``S^(N,..,N) E`` inside the grid."""
    return max(min(want, (tt.grid.n - tt.k_min) // sum(tt.steps)), 0)


def _classify(tt, params, out):
    report = classify(tt, params["maxOrder"], params["tol"])
    out.data["classification"] = report.as_dict()
    out.data["symbols"] = [classify_symbol(s, tt.grid, params["maxOrder"]).as_dict() for s in tt.symbols]
    rows = []
    for n in box(tt.d, params["maxOrder"]):
        if 0 < sum(n) <= params["maxOrder"]:
            b = toral_defect(tt, n)
            for j, v in enumerate(b.values):
                rows.append([";".join(map(str, n)), sum(n), j * tt.grid.h, float(v)])
    out.tables["defects"] = (["n", "order", "x", "value"], rows)


def _duals(tt, params, out):
    out.data["jointKernel"] = joint_kernel(tt).as_dict()
    out.data["toralDual"] = toral_cauchy_dual(tt).as_dict()
    out.data["sphericalDual"] = spherical_cauchy_dual(tt).as_dict()


def _kernel_points(series, params):
    r = series.inner_radius
    points = [params["rho"] * r.astype(complex)]
    if params["psd_samples"]:
        points.extend(sample_polydisc(r, params["psd_samples"], 0.9, _rng(params, 1)).points)
    return np.array(points)


def _kernel(tt, params, out):
    N = _lattice_bound(tt, params["latticeN"])
    series = kernel_coefficients(tt, N)
    data = {"series": series.as_dict(), "latticeNRequested": params["latticeN"]}
    if tt.d == 2:
        data["fourFactorResidual"] = max(
            float(np.max(np.abs(c - four_factor_coefficient(tt, n)))) for n, c in series.coefficients.items())
    points = _kernel_points(series, params)
    z = points[0]
    data["diagonalValue"] = {"z": [[v.real, v.imag] for v in z]}
    kv = evaluate_kernel(series, z, z, 0.0)
    data["diagonalValue"].update(value=[kv.value.real, kv.value.imag], tail=kv.tail_bound)
    if len(points) > 1:
        data["psd"] = check_psd(series, points[1:], 0.0, 1e-9).as_dict()
    rows = []
    for a in points:
        for b in points:
            for j in range(tt.k_min):
                v = evaluate_kernel(series, a, b, j * tt.grid.h)
                rows.append([";".join(repr(float(c.real)) for c in a), ";".join(repr(float(c.imag)) for c in a),
                             ";".join(repr(float(c.real)) for c in b), ";".join(repr(float(c.imag)) for c in b),
                             j * tt.grid.h, v.value.real, v.value.imag, v.tail_bound])
    out.tables["kernel"] = (["z_re", "z_im", "λ_re", "λ_im", "x", "value_re", "value_im", "tail"], rows)
    out.data["kernel"] = data


def _spectrum(tt, params, out):
    bounds = polydisc_bounds(tt, params["kmax"])
    data = {"bounds": bounds.as_dict()}
    rows = []
    for i, op in enumerate(tt.ops):
        for p in power_norm_table(op, bounds.primal[i].kmax):
            rows.append([i, p.k, p.value, p.value ** (1.0 / p.k), p.at_edge])
    out.tables["power_norms"] = (["axis", "k", "norm", "root", "at_edge"], rows)

    thetas = params["theta_list"]
    if thetas is None:
        thetas = _rng(params, 2).uniform(0, 2 * math.pi, 5).tolist()
    dense = tt.grid.n <= _DENSE_SPECTRUM_LIMIT
    if dense:
        data["circularSymmetry"] = check_circular_symmetry(tt, thetas).as_dict()
        levels = sorted({1, 2, 3, -(-tt.grid.n // tt.k_min)})
        data["kernelDensity"] = check_kernel_density(tt, levels).as_dict()
    rng = _rng(params, 3)
    axes = []
    for i, op in enumerate(tt.ops):
        R = bounds.outer[i]
        lams = 1.5 * R * np.sqrt(rng.uniform(size=params["lambdaSamples"])) \
            * np.exp(2j * math.pi * rng.uniform(size=params["lambdaSamples"]))
        axis = {"pointSpectrum": check_no_point_spectrum(op, lams).as_dict()}
        if bounds.inner is not None:
            r = bounds.inner[i]
            axis["eigenfunction"] = {k: v for k, v in adjoint_eigenfunction(
                op, 0.5 * r, np.ones(tt.steps[i])).as_dict().items() if k != "partialNorms"}
            if dense:
                sv = [min_singular_value(op, 0.9 * r * np.exp(1j * th)) for th in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
                axis["minSingularValue"] = {"radius": 0.9 * r, "value": min(sv)}
        axes.append(axis)
    data["axes"] = axes
    out.data["spectrum"] = data


def _verify(tt, params, out):
    tol = params["tol"]
    checks = {}
    checks["commutation"] = {**tt.commutation.as_dict(), "passed": out.check("commutation", tt.commutes)}
    if not tt.commutes:
        out.data["verify"] = checks
        return
    dual = toral_cauchy_dual(tt)
    checks["dualIdentity"] = {"residual": dual.identity_residual,
                              "passed": out.check("dualIdentity", dual.identity_residual <= 1e-12)}
    radius = params["radius"]
    for which in ("primal", "dual"):
        rep = check_orthogonality(tt, radius, which, tol)
        checks[f"orthogonality_{which}"] = rep.as_dict()
        out.check(f"orthogonality_{which}", rep.passed)
    rep = check_analytic(tt, -(-tt.grid.n // max(tt.steps)))
    checks["analytic"] = rep.as_dict()
    out.check("analytic", rep.passed)
    for which in ("primal", "dual"):
        rep = check_wandering(tt, which)
        checks[f"wandering_{which}"] = rep.as_dict()
        out.check(f"wandering_{which}", rep.passed)
    rep = check_kernel_condition(tt, params["alphaMax"])
    checks["kernelCondition"] = rep.as_dict()
    out.check("kernelCondition", rep.holds)

    Ni = _lattice_bound(tt, params["intertwineN"])
    f = np.zeros(tt.grid.n)
    support = tt.grid.n - max(tt.steps)
    f[:support] = _rng(params, 4).standard_normal(support)
    rep = check_intertwining(tt, f, Ni, tol)
    checks["intertwining"] = rep.as_dict()
    out.check("intertwining", rep.passed)

    worst, where = diagonal_orthogonality(tt, min(Ni, params["intertwineN"]))
    checks["diagonalOrthogonality"] = {"max": worst, "where": [list(w) for w in where] if where else None,
                                       "passed": out.check("diagonalOrthogonality", worst <= 1e-12)}

    series = kernel_coefficients(tt, _lattice_bound(tt, params["latticeN"]))
    samples = sample_polydisc(series.inner_radius, max(params["psd_samples"], 2), 0.9, _rng(params, 5))
    rep = check_psd(series, samples, 0.0, 1e-9)
    checks["psd"] = rep.as_dict()
    out.check("psd", rep.psd)

    if tt.grid.n <= _DENSE_SPECTRUM_LIMIT:
        thetas = params["theta_list"] or _rng(params, 2).uniform(0, 2 * math.pi, 5).tolist()
        rep = check_circular_symmetry(tt, thetas)
        checks["circularSymmetry"] = rep.as_dict()
        out.check("circularSymmetry", rep.passed)
    bounds = polydisc_bounds(tt, params["kmax"])
    checks["boundsConsistent"] = {"inner": None if bounds.inner is None else bounds.inner.tolist(),
                                  "outer": bounds.outer.tolist(),
                                  "passed": out.check("boundsConsistent", bounds.consistent)}
    out.data["verify"] = checks


def _spherical_model(tt, params, out):
    """Reported alongside verify; a spherical-model verdict is informational."""
    try:
        out.data["sphericalModel"] = spherical_model_condition(tt, min(params["alphaMax"], 2)).as_dict()
    except SemigroupLabError as exc:
        out.data["sphericalModel"] = {"skipped": f"{type(exc).__name__}: {exc}"}


_RUNNERS = {"classify": (_classify,), "duals": (_duals,), "kernel": (_kernel,),
            "spectrum": (_spectrum,), "verify-all": (_verify, _spherical_model)}


def _run_tuple(tc, config, analyses):
    params = config.parameters
    outcome = _Outcome()
    timings = {}
    try:
        tt = tc.build(config.grid, params["tol"])
        outcome.data["tuple"] = {**tt.describe(), "kMin": tt.k_min, "commutes": tt.commutes}
        for name in analyses:
            start = time.perf_counter()
            for runner in _RUNNERS[name]:
                runner(tt, params, outcome)
            timings[name] = time.perf_counter() - start
        error = None
    except SemigroupLabError as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
    return outcome, timings, error


@dataclass
class Report:
    data: dict
    tables: dict
    timings: dict
    exit_code: int

    def to_json(self):
        payload = dict(self.data)
        payload["timings"] = self.timings
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _threads():
    raw = os.environ.get("SEMIGROUP_LAB_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"SEMIGROUP_LAB_THREADS must be an integer, got {raw!r}", field="env")
    if value < 1:
        raise ValidationError("SEMIGROUP_LAB_THREADS must be >= 1", field="env")
    return value


def run(config, subcommand=None):
    """Run ``subcommand`` (or the config's own analysis list) over every tuple."""
    if subcommand is None:
        analyses = config.analyses
    else:
        if subcommand not in SUBCOMMANDS:
            raise ValidationError(f"unknown subcommand {subcommand!r}", field="subcommand")
        analyses = (SUBCOMMANDS[subcommand],)
    workers = max(1, min(_threads(), len(config.tuples)))
    if analyses:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda tc: _run_tuple(tc, config, analyses), config.tuples))
    else:
        results = []

    data = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "semigroup-lab", "version": __version__},
        "config": config.echo(),
        "defaults": {"grid": DEFAULT_GRID, "parameters": DEFAULT_PARAMETERS},
        "analyses": list(analyses),
        "grid": config.grid.as_dict(),
        "results": {},
    }
    tables, timings, failures, errors = {}, {}, [], []
    for i, (tc, (outcome, tt_timings, error)) in enumerate(zip(config.tuples, results)):
        entry = dict(outcome.data)
        if error is not None:
            entry["error"] = error
            errors.append({"tuple": tc.name, **error})
        entry["failures"] = list(outcome.failures)
        failures.extend(f"{tc.name}:{f}" for f in outcome.failures)
        data["results"][tc.name] = entry
        timings[tc.name] = tt_timings
        for key, table in outcome.tables.items():
            slug = re.sub(r"[^A-Za-z0-9.+-]+", "_", tc.name).strip("_")
            tables[f"{key}_{i:02d}_{slug}"] = table
    data["status"] = {"failures": failures, "errors": errors,
                      "passed": not failures and not errors}
    code = 2 if errors else (1 if failures else 0)
    return Report(data, tables, timings, code)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def table_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(_jsonable(row))
    return buf.getvalue()


def emit(report, fmt="json", path=None):
    """Write the JSON report, plus one CSV per table for ``fmt="csv"``; returns written paths.

    Without a path everything goes to stdout.
    """
    if fmt not in ("json", "csv"):
        raise ValidationError("format must be json or csv", field="format")
    text = report.to_json()
    if path is None:
        sys.stdout.write(text)
        if fmt == "csv":
            for name in sorted(report.tables):
                sys.stdout.write(f"# {name}\n" + table_csv(*report.tables[name]))
        return []
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    json_path = path if fmt == "json" else path.with_suffix(".json")
    json_path.write_text(text, encoding="utf-8")
    written = [json_path]
    if fmt == "csv":
        for name in sorted(report.tables):
            p = path.with_name(f"{path.stem}.{name}.csv")
            p.write_text(table_csv(*report.tables[name]), encoding="utf-8")
            written.append(p)
    return written


def build_parser():
    parser = argparse.ArgumentParser(prog="semigroup-lab",
                                     description="Analyze multivariable weighted translation semigroups.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--format", choices=("json", "csv"), default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--order", type=int, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        params = dict(config.parameters)
        if args.tol is not None:
            params["tol"] = _number(args.tol, "--tol", positive=True)
        if args.order is not None:
            if args.order < 0:
                raise ValidationError("must be >= 0", field="--order")
            params["maxOrder"] = args.order
        config = AnalysisConfig(config.grid, config.tuples, config.analyses, params, config.output)
        report = run(config, args.command)
    except ParseError as exc:
        print(f"ParseError: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"ValidationError: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or config.output.get("format", "json")
    out = args.out or config.output.get("path")
    try:
        emit(report, fmt, out)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return 2
    for err in report.data["status"]["errors"]:
        print(f"{err['tuple']}: {err['type']}: {err['message']}", file=sys.stderr)
    for fail in report.data["status"]["failures"]:
        print(f"FAIL {fail}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
