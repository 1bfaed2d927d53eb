"""Batch command-line front end.

    eqsrc <command> --spec job.json [--out path] [--format csv|json]

Exit status: 0 on success, 2 for an invalid job, 3 for a numerical failure
(the error name is printed on stderr).
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field as dc_field

import jsonschema
import mpmath
import numpy as np

from . import asympt, oracle
from .equilibrium import EquilibriumData, build_equilibrium
from .errors import EqsrcError, InvalidArgumentError, SchemaError
from .field import FieldSpec
from .jmap import new_map
from .numerics import DEFAULT_ORACLE_BITS

COMMANDS = ("equilibrium", "density", "asymptotics", "oracle-compare", "convergence-report")
NEEDS_N = ("asymptotics", "oracle-compare", "convergence-report")
NEEDS_POINTS = ("asymptotics", "oracle-compare")

HEADERS = {
    "density": "x,psi",
    "asymptotics": "z_re,z_im,region,value_re,value_im,log_scale",
    "oracle-compare": "n,x,exact,asymptotic,rel_err",
    "convergence-report": "n,max_rel_err_outside,max_rel_err_bulk,h_ratio",
}

_POINT = {
    "type": "object",
    "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
    "required": ["re"],
    "additionalProperties": False,
}

JOB_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "field": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["quadratic", "quartic", "polynomial"]},
                "t": {"type": "number", "exclusiveMinimum": 0},
                "u": {"type": "number"},
                "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 3},
            },
            "required": ["kind"],
            "additionalProperties": False,
            "allOf": [
                {"if": {"properties": {"kind": {"const": "quadratic"}}},
                 "then": {"required": ["t"], "not": {"anyOf": [{"required": ["u"]}, {"required": ["coeffs"]}]}}},
                {"if": {"properties": {"kind": {"const": "quartic"}}},
                 "then": {"required": ["u"], "not": {"anyOf": [{"required": ["t"]}, {"required": ["coeffs"]}]}}},
                {"if": {"properties": {"kind": {"const": "polynomial"}}},
                 "then": {"required": ["coeffs"], "not": {"anyOf": [{"required": ["t"]}, {"required": ["u"]}]}}},
            ],
        },
        "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "k": {"type": "integer"},
        "family": {"enum": ["p", "q"]},
        "points": {"type": "array", "items": _POINT, "minItems": 1},
        "grid_points": {"type": "integer", "minimum": 2},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "precision_bits": {"type": "integer", "minimum": 53},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "output_path": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
        "overrides": {
            "type": "object",
            "properties": {
                "c1": {"type": "number", "exclusiveMinimum": 0},
                "c0": {"type": "number"},
                "a": {"type": "number"},
                "b": {"type": "number"},
                "ell": {"type": "number"},
                "regularity": {"type": "object"},
            },
            "required": ["c1", "c0"],
            "additionalProperties": False,
        },
    },
    "required": ["command", "field"],
    "additionalProperties": False,
}


@dataclass
class JobSpec:
    command: str
    field: FieldSpec
    n_list: list = dc_field(default_factory=list)
    k: int = 0
    family: str = "p"
    points: list = dc_field(default_factory=list)
    grid_points: int = 201
    delta: float | None = None
    precision_bits: int = DEFAULT_ORACLE_BITS
    tol: float = 1e-10
    output_path: str | None = None
    format: str | None = None
    overrides: dict | None = None


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else ""


def validate_schema(raw) -> JobSpec:
    """Parse and validate a job (JSON text or an already-decoded dict)."""
    if isinstance(raw, (str, bytes)):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", pointer="") from exc
    else:
        data = copy.deepcopy(raw)
    validator = jsonschema.Draft202012Validator(JOB_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is not None:
        raise SchemaError(err.message, pointer=_pointer(err.absolute_path))
    f = data["field"]
    try:
        if f["kind"] == "quadratic":
            spec = FieldSpec.quadratic(f["t"])
        elif f["kind"] == "quartic":
            spec = FieldSpec.quartic(f["u"])
        else:
            spec = FieldSpec.polynomial(f["coeffs"])
    except InvalidArgumentError as exc:
        key = {"quadratic": "t", "quartic": "u", "polynomial": "coeffs"}[f["kind"]]
        raise SchemaError(f"{exc} (V(x)/(|x|+1) must tend to +infinity)",
                          pointer=f"/field/{key}") from exc
    cmd = data["command"]
    if cmd in NEEDS_N and "n_list" not in data:
        raise SchemaError(f"command {cmd!r} needs n_list", pointer="/n_list")
    if cmd in NEEDS_POINTS and "points" not in data:
        raise SchemaError(f"command {cmd!r} needs points", pointer="/points")
    points = [complex(p["re"], p.get("im", 0.0)) for p in data.get("points", [])]
    if cmd == "oracle-compare":
        for i, z in enumerate(points):
            if z.imag != 0.0:
                raise SchemaError("oracle-compare takes real points", pointer=f"/points/{i}/im")
    bits = data.get("precision_bits", DEFAULT_ORACLE_BITS)
    env = os.environ.get("EQSRC_PRECISION_BITS")
    if env is not None:
        try:
            bits = int(env)
        except ValueError as exc:
            raise SchemaError(f"EQSRC_PRECISION_BITS must be an integer, got {env!r}",
                              pointer="/precision_bits") from exc
        if bits < 53:
            raise SchemaError("EQSRC_PRECISION_BITS must be >= 53", pointer="/precision_bits")
    return JobSpec(
        command=cmd,
        field=spec,
        n_list=list(data.get("n_list", [])),
        k=data.get("k", 0),
        family=data.get("family", "p"),
        points=points,
        grid_points=data.get("grid_points", 201),
        delta=data.get("delta"),
        precision_bits=bits,
        tol=data.get("tol", 1e-10),
        output_path=data.get("output_path"),
        format=data.get("format"),
        overrides=data.get("overrides"),
    )


# --- formatting ----------------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits; extended-precision values outside double range
    keep their exponent."""
    if isinstance(v, (mpmath.mpf, mpmath.mpc)):
        v = mpmath.re(v)
        f = float(v)
        if math.isinf(f) or (f == 0.0 and v != 0):
            return mpmath.nstr(v, 17, strip_zeros=False, min_fixed=1, max_fixed=0)
        v = f
    return format(float(v), ".17g")


def _csv(header: str, rows) -> str:
    out = io.StringIO()
    out.write(header + "\n")
    for row in rows:
        out.write(",".join(r if isinstance(r, str) else fmt(r) for r in row) + "\n")
    return out.getvalue()


def _json(obj) -> str:
    def conv(o):
        if isinstance(o, complex):
            return {"re": float(o.real), "im": float(o.imag)}
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        if isinstance(o, (np.bool_,)):
            return bool(o)
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, float) and not math.isfinite(o):
            return None
        return o

    return json.dumps(conv(obj), indent=2, sort_keys=True) + "\n"


# --- commands ------------------------------------------------------------------

def _equilibrium(job: JobSpec) -> EquilibriumData:
    params = None
    if job.overrides is not None:
        params = new_map(job.overrides["c1"], job.overrides["c0"])
    return build_equilibrium(job.field, params=params)


def _regularity_summary(report: dict) -> dict:
    return json.loads(_json(report))


def cmd_equilibrium(job: JobSpec, fmt_out: str) -> str:
    eq = _equilibrium(job)
    result = {"c1": eq.c1, "c0": eq.c0, "a": eq.a, "b": eq.b, "ell": eq.ell,
              "regularity": _regularity_summary(eq.regularity_report)}
    if fmt_out == "json":
        return _json(result)
    ok = "true" if eq.regularity_report.get("one_cut_regular") else "false"
    return _csv("c1,c0,a,b,ell,one_cut_regular", [(eq.c1, eq.c0, eq.a, eq.b, eq.ell, ok)])


def cmd_density(job: JobSpec, fmt_out: str) -> str:
    eq = _equilibrium(job)
    if job.points:
        xs = np.array([z.real for z in job.points])
    else:
        # cosine spacing resolves the square-root edges
        xs = eq.c0 - eq.b0 * np.cos(np.linspace(0.0, math.pi, job.grid_points))
        xs[0], xs[-1] = eq.a, eq.b
    psi = np.atleast_1d(eq.psi(xs))
    if fmt_out == "json":
        return _json([{"x": float(x), "psi": float(v)} for x, v in zip(xs, psi)])
    return _csv(HEADERS["density"], zip(xs, psi))


def _asym(eq, job, n, z):
    f = asympt.asym_p if job.family == "p" else asympt.asym_q
    return f(eq, n, job.k, z, job.delta)


def _mp_value(res: asympt.AsymptoticResult):
    return mpmath.mpc(res.mantissa) * mpmath.exp(res.log_scale)


def cmd_asymptotics(job: JobSpec, fmt_out: str) -> str:
    eq = _equilibrium(job)
    rows = []
    for n in job.n_list:
        for z in job.points:
            r = _asym(eq, job, n, z)
            rows.append((n, z, r))
    if fmt_out == "json":
        return _json([{"n": n, "z": z, "region": r.region.tag, "form": r.form,
                       "value": complex(r.mantissa), "log_scale": r.log_scale} for n, z, r in rows])
    return _csv(HEADERS["asymptotics"],
                [(z.real, z.imag, r.region.tag, r.mantissa.real, r.mantissa.imag, r.log_scale)
                 for _, z, r in rows])


def _exact_poly(job: JobSpec, n: int):
    j = n + job.k
    if j < 0:
        raise InvalidArgumentError(f"degree n + k = {j} is negative")
    tab = oracle.compute_moments(job.field, n, j, j, job.precision_bits)
    return oracle.exact_p(tab, j) if job.family == "p" else oracle.exact_q(tab, j)


def cmd_oracle_compare(job: JobSpec, fmt_out: str) -> str:
    eq = _equilibrium(job)
    rows = []
    for n in job.n_list:
        poly = _exact_poly(job, n)
        for z in job.points:
            exact = mpmath.re(poly.eval_mp(z.real))
            approx = mpmath.re(_mp_value(_asym(eq, job, n, z.real)))
            rel = abs(approx - exact) / abs(exact) if exact != 0 else mpmath.inf
            rows.append((n, z.real, exact, approx, rel))
    if fmt_out == "json":
        return _json([{"n": n, "x": x, "exact": fmt(e), "asymptotic": fmt(a), "rel_err": fmt(r)}
                      for n, x, e, a, r in rows])
    return _csv(HEADERS["oracle-compare"], rows)


def _default_report_points(eq: EquilibriumData):
    w = eq.b - eq.a
    outside = [eq.b + 0.5 * w, eq.a - 0.5 * w]
    bulk = list(eq.a + w * np.array([0.3, 0.5, 0.7]))
    return outside, bulk


def envelope_error(eq: EquilibriumData, family: str, n: int, k: int, x: float, exact) -> float:
    """|exact - asymptotic| relative to the bulk envelope r e^{n L}."""
    res = asympt.asym_p(eq, n, k, x) if family == "p" else asympt.asym_q(eq, n, k, x)
    p = eq.map
    if family == "p":
        amp = asympt.eval_Gk(p, k, asympt.boundary_inverse(p, x, "plus"), side="outside")
        level = eq.L0(x)
    else:
        amp = asympt.eval_Ghatk(p, k, asympt.boundary_inverse(p, x, "minus"), side="inside")
        level = eq.L0(x) + eq.S(x).real
    env = mpmath.mpf(2 * abs(amp)) * mpmath.exp(n * level)
    return float(abs(_mp_value(res).real - exact) / env)


def cmd_convergence_report(job: JobSpec, fmt_out: str) -> str:
    eq = _equilibrium(job)
    if job.points:
        delta = asympt.default_delta(eq) if job.delta is None else job.delta
        outside, bulk = [], []
        for z in job.points:
            tag = asympt.classify_region(eq, z.real, delta).tag
            (outside if tag == "A" else bulk if tag == "B" else []).append(z.real)
    else:
        outside, bulk = _default_report_points(eq)
    rows = []
    for n in job.n_list:
        j = n + job.k
        tab = oracle.compute_moments(job.field, n, j, j, job.precision_bits)
        p, q = oracle.exact_p(tab, j), oracle.exact_q(tab, j)
        poly = p if job.family == "p" else q
        err_out = max((float(abs(mpmath.re(_mp_value(_asym(eq, job, n, x))) / poly.eval_mp(x) - 1))
                       for x in outside), default=float("nan"))
        err_bulk = max((envelope_error(eq, job.family, n, job.k, x, poly.eval_mp(x)) for x in bulk),
                       default=float("nan"))
        h_exact = oracle.exact_h(tab, p, q)
        h_asym = asympt.asym_h(eq, n, job.k)
        ratio = mpmath.mpf(h_asym.mantissa.real) * mpmath.exp(h_asym.log_scale) / h_exact
        rows.append((n, err_out, err_bulk, float(ratio)))
    if fmt_out == "json":
        return _json([{"n": n, "max_rel_err_outside": a, "max_rel_err_bulk": b, "h_ratio": c}
                      for n, a, b, c in rows])
    return _csv(HEADERS["convergence-report"], rows)


DISPATCH = {
    "equilibrium": cmd_equilibrium,
    "density": cmd_density,
    "asymptotics": cmd_asymptotics,
    "oracle-compare": cmd_oracle_compare,
    "convergence-report": cmd_convergence_report,
}


def run(job: JobSpec, fmt_out: str | None = None) -> str:
    """Execute a validated job and return the rendered output."""
    fmt_out = fmt_out or job.format or ("json" if job.command == "equilibrium" else "csv")
    return DISPATCH[job.command](job, fmt_out)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eqsrc", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--spec", required=True, help="job file (JSON)")
    ap.add_argument("--out", help="output path (default: job output_path or stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"schema-error: cannot read job file: {exc}", file=sys.stderr)
        return 2
    if isinstance(raw, dict):
        raw.setdefault("command", args.command)
    try:
        job = validate_schema(raw)
        if job.command != args.command:
            raise SchemaError(f"job command {job.command!r} does not match {args.command!r}",
                              pointer="/command")
        text = run(job, args.format)
    except SchemaError as exc:
        print(f"schema-error: {exc.pointer or '/'}: {exc}", file=sys.stderr)
        return 2
    except EqsrcError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return 3
    out = args.out or job.output_path
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
