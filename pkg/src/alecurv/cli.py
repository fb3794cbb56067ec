"""Command-line front end.

Subcommands: ``verify``, ``curvature``, ``decay``, ``inequality``,
``pohozaev``, ``ode``, ``volume``.  Exit status 0 means every check is
within tolerance, 1 means a claimed bound or identity failed (the report
names it) and 2 means a usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .analysis_lab import (
    QUANTITIES,
    covector_power_field,
    decay_fit,
    ode_envelope,
    pohozaev_residual,
    radial_power_field,
    volume_expansion_fit,
)
from .curvature_engine import BackendDisagreement, backend_cross_check, bianchi_residuals, curvature_batch
from .inequality_lab import (
    KINDS,
    constraint_space_build,
    directional_ratio,
    directional_ratio_max,
    invariance_audit,
    matrix_claim_max,
)
from .metric_zoo import CHART_FAMILIES, DomainError, kahler_chart, kahler_profile, sphere_area

SCHEMA = 1
TOLERANCES = {
    "algebra": 1e-12,
    "first_order": 1e-10,
    "higher_order": 1e-8,
    "backend": 1e-6,
    "bound": 1e-9,
}
DEFAULT_DIMS = {
    "rm-deriv-divfree": (4, 5, 6),
    "weyl-deriv-divfree": (4, 5, 6),
    "kahler-ricci": (2, 3),
    "selfdual-ricci": (4,),
    "rm-deriv-unconstrained": (4,),
    "matrix-claim": tuple(range(2, 13)),
}
ANCHORS = {
    "scalar_flat": "scalar-flat explicit family: R = 0",
    "harmonic": "harmonic metric: divergence of Rm vanishes",
    "contracted_bianchi": "contracted second Bianchi: (div Rm)_jkl = nabla_k Rc_jl - nabla_l Rc_jk",
    "backend": "exact jets agree with Richardson finite differences",
    "flat": "Euclidean chart: Rm = 0",
    "sphere": "round sphere: constant sectional curvature 1/radius^2",
    "kahler_ratio": "Kato-type bound for nabla Rc on scalar-flat Kaehler: ratio <= n/(n+2)",
    "decay": "ALE of order n-2 with curvature decaying like r^-n (r^-(n+2) when Ricci-flat Kaehler)",
    "rm-deriv-divfree": "Kato-type bound for nabla Rm with div Rm = 0: ratio <= n/(n+2)",
    "weyl-deriv-divfree": "Kato-type bound for nabla W with div W = 0: ratio <= (n-1)/(n+1)",
    "kahler-ricci": "Kato-type bound for nabla Rc on Kaehler, constant R: ratio <= n/(n+2)",
    "selfdual-ricci": "Kato-type bound for nabla Rc on self-dual 4-manifolds: ratio <= 2/3",
    "rm-deriv-unconstrained": "control: second Bianchi only, no bound claimed",
    "matrix-claim": "zero-diagonal zero-row-sum matrices: F(M) <= d |M|^2",
    "invariance": "frame-fixed certificate invariant under admissible rotations",
    "pohozaev": "Pohozaev identity with bulk term (n-2)/2 |nabla T|^2, exact Gamma and curvature terms",
    "ode": "comparison ODE f <= -(r/a) f' + C0 r^-b: envelope r^-min(a,b), or r^-a ln r when a = b",
    "volume_lead": "volume growth of the scalar-flat Kaehler family: leading term |S^{2m-1}| r^{2m} / (2m)",
    "volume_sub": "volume growth of the scalar-flat Kaehler family: r^2 coefficient (1/2)(m-3/2) alpha |S^{2m-1}|",
    "volume_sign": "r^2 volume coefficient changes sign with p",
    "volume_first_integral": "volume equals the first integral |S^{2m-1}| (r^{2m} - a^{2m}) / (2m)",
}


class UsageError(Exception):
    """Bad command line, configuration or chart spec (exit status 2)."""


class ChartSpecError(UsageError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# chart specs ---------------------------------------------------------------------
def parse_chart_spec(text):
    """Parse ``name:key=value,key=value`` into ``(name, params)``.

    Raises :class:`ChartSpecError` with the 0-based position of the first
    bad token.
    """
    text = text.strip()
    name, sep, rest = text.partition(":")
    if name not in CHART_FAMILIES:
        raise ChartSpecError(f"unknown chart family {name!r}; expected one of {', '.join(CHART_FAMILIES)}", 0)
    _, keys = CHART_FAMILIES[name]
    params = {}
    pos = len(name) + 1
    if sep and not rest:
        raise ChartSpecError("expected key=value after ':'", pos)
    for token in rest.split(",") if rest else ():
        key, eq, value = token.partition("=")
        if not eq or not key:
            raise ChartSpecError(f"expected key=value, got {token!r}", pos)
        if key not in keys:
            raise ChartSpecError(f"unknown key {key!r} for {name}; expected one of {', '.join(keys)}", pos)
        if key in params:
            raise ChartSpecError(f"duplicate key {key!r}", pos)
        kind = keys[key][0]
        try:
            if kind is int:
                params[key] = int(value)
            else:
                params[key] = float(value)
                if not math.isfinite(params[key]):
                    raise ValueError
        except ValueError:
            raise ChartSpecError(f"bad {kind.__name__} value {value!r} for {key}", pos + len(key) + 1) from None
        pos += len(token) + 1
    missing = [k for k, (_, required) in keys.items() if required and k not in params]
    if missing:
        raise ChartSpecError(f"missing required key(s) {', '.join(missing)} for {name}", len(text))
    return name, params


def build_chart(text):
    name, params = parse_chart_spec(text)
    try:
        return CHART_FAMILIES[name][0](**params)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid chart {text!r}: {exc}") from None


# reports -------------------------------------------------------------------------
def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def check(name, anchor_key, passed, value=None, threshold=None, status=None, **detail):
    """One check record; ``status`` overrides pass/fail (e.g. ``"info"``)."""
    rec = {
        "name": name,
        "anchor": ANCHORS[anchor_key],
        "status": status or ("pass" if passed else "fail"),
        "value": value,
        "threshold": threshold,
    }
    rec.update(detail)
    return rec


def build_report(command, args, tol, checks, rows):
    failed = [c["name"] for c in checks if c["status"] == "fail"]
    return _clean(
        {
            "schema": SCHEMA,
            "artifact": "alecurv",
            "version": __version__,
            "command": command,
            "seed": args.seed,
            "tolerances": tol,
            "tol_scale": args.tol_scale,
            "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "output", "config", "jobs")},
            "checks": checks,
            "rows": rows,
            "failed": failed,
            "exit_code": 1 if failed else 0,
        }
    )


def render(report, fmt):
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    table = report["rows"] if report["rows"] else report["checks"]
    fields = []
    for row in table:
        for key in row:
            if key not in fields:
                fields.append(key)
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in table:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
    return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".alecurv-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# shared pieces -------------------------------------------------------------------
def _rng(seed, *salt):
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *salt]))


def _default_radii(chart):
    scale = chart.length_scale()
    return 2.0 * scale, 20.0 * scale


def _family(chart):
    return chart.spec().split(":")[0]


def _norm(t):
    return np.sqrt(np.sum(t.reshape(t.shape[0], -1) ** 2, axis=1))


def _parallel(jobs, tasks):
    """Run zero-argument callables, results in submission order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def curvature_checks(chart, points, tol, label=None):
    """Checks and per-point rows for a batch of points on one chart."""
    label = label or chart.spec()
    b = curvature_batch(chart, points, derivatives=True)
    res = bianchi_residuals(b)
    rm, rc = _norm(b["rm"]), _norm(b["rc"])
    grad, div = _norm(b["grad_rm"]), _norm(b["div_rm"])
    grad_rc = _norm(b["grad_rc"])
    r = b["r_scalar"]
    n = chart.dim
    rows = [
        {
            "chart": label,
            "point": points[i],
            "rm_norm": rm[i],
            "rc_norm": rc[i],
            "r_scalar": r[i],
            "w_norm": _norm(b["w"])[i],
            "grad_rm_norm": grad[i],
            "delta_rm_norm": div[i],
            "bianchi_first": res["first"][i],
            "bianchi_contracted": res["contracted"][i],
            "bianchi_second": res["second"][i],
        }
        for i in range(len(points))
    ]
    out = []
    worst = float(np.max(res["contracted"]))
    out.append(check(f"{label}: contracted Bianchi", "contracted_bianchi", worst < tol["higher_order"], worst, tol["higher_order"]))
    try:
        errs = backend_cross_check(chart, points, 3, tol=tol["backend"])
        out.append(check(f"{label}: derivative backends", "backend", True, max(errs.values()), tol["backend"]))
    except BackendDisagreement as exc:
        out.append(check(f"{label}: derivative backends", "backend", False, None, tol["backend"], detail=str(exc)))
    fam = _family(chart)
    scale = tol["higher_order"] / TOLERANCES["higher_order"]
    if fam == "kahler":
        ratio = float(np.max(np.abs(r) / np.maximum(rm, 1e-30)))
        thr = 1e-7 * scale
        out.append(check(f"{label}: scalar flat", "scalar_flat", ratio < thr, ratio, thr))
        live = grad_rc > 1e-8 * grad
        if np.any(live):
            kr = float(np.max(directional_ratio(b["grad_rc"][live], order=3)))
            thr = n / (n + 2) + 1e-6 * scale
            out.append(check(f"{label}: directional nabla Rc ratio", "kahler_ratio", kr <= thr, kr, thr))
    elif fam == "schwarzschild":
        worst_r = float(np.max(np.abs(r)))
        thr = 1e-9 * scale
        out.append(check(f"{label}: scalar flat", "scalar_flat", worst_r < thr, worst_r, thr))
        rel = float(np.max(div / np.maximum(np.maximum(grad, b["deriv_scale"]), 1e-300)))
        thr = 1e-6 * scale
        out.append(check(f"{label}: harmonic", "harmonic", rel < thr, rel, thr))
    elif fam in ("flat", "flatpolar"):
        worst_rm = float(np.max(rm))
        out.append(check(f"{label}: flat", "flat", worst_rm < tol["first_order"], worst_rm, tol["first_order"]))
    elif fam == "sphere":
        expected = 2.0 / chart.radius_**2
        err = float(np.max(np.abs(r - expected))) / expected
        out.append(check(f"{label}: constant curvature", "sphere", err < tol["first_order"], err, tol["first_order"]))
    return out, rows


def expected_decay(chart, quantity):
    """``(exponent, tolerance)`` claimed for this chart, or ``None``."""
    fam = _family(chart)
    n = chart.dim
    if fam == "schwarzschild" and chart.mu > 0:
        return {"metric_deviation": (n - 2, 0.05), "rm_norm": (n, 0.1)}.get(quantity)
    if fam == "kahler" and chart.profile.a > 0:
        pr = chart.profile
        if pr.p == pr.m:
            return {"rm_norm": (n + 2, 0.1)}.get(quantity)
        return {"metric_deviation": (n - 2, 0.05), "rm_norm": (n, 0.1)}.get(quantity)
    return None


def decay_checks(chart, quantity, r0, rho, rungs, samples, seed, tol_scale):
    fit = decay_fit(chart, quantity, r0, rho, rungs, samples, seed)
    row = {"chart": chart.spec(), **fit.as_row()}
    exp = expected_decay(chart, quantity)
    name = f"{chart.spec()}: {quantity} decay exponent"
    if exp is None or fit.flag != "ok":
        return [check(name, "decay", True, fit.exponent, None, status="info", flag=fit.flag)], [row]
    target, width = exp
    width *= tol_scale
    ok = abs(fit.exponent - target) <= width
    return [check(name, "decay", ok, fit.exponent, [target - width, target + width], stderr=fit.stderr)], [row]


def inequality_task(kind, n, seed, tol):
    """Certificate rows for one kind and dimension parameter."""
    if kind == "matrix-claim":
        lam, _ = matrix_claim_max(n)
        thr = n + 1e-12 * tol["bound"] / TOLERANCES["bound"]
        row = {"kind": kind, "n": n, "space_dim": None, "lambda_max": lam, "bound": float(n), "gap": n - lam}
        return [check(f"matrix-claim d={n}", "matrix-claim", lam <= thr, lam, thr)], [row]
    space = constraint_space_build(kind, n, allow_empty=True)
    res = directional_ratio_max(space)
    dim_label = "m" if kind == "kahler-ricci" else "n"
    row = {
        "kind": kind,
        dim_label: n,
        "space_dim": space.dim,
        "lambda_max": res.lambda_max,
        "bound": res.bound,
        "gap": res.gap,
        "has_bound": space.has_bound,
    }
    name = f"{kind} {dim_label}={n}"
    out = []
    if space.has_bound:
        out.append(check(name, kind, res.within_bound(tol["bound"]), res.lambda_max, res.bound + tol["bound"], gap=res.gap))
    else:
        out.append(check(name, kind, True, res.lambda_max, None, status="info", gap=res.gap))
    if space.dim:
        worst_res, worst_dl = invariance_audit(space, _rng(seed, KINDS.index(kind), n), trials=2)
        ok = worst_dl < tol["bound"] and worst_res < 1e-9 * tol["bound"] / TOLERANCES["bound"]
        out.append(check(f"{name}: rotation audit", "invariance", ok, worst_dl, tol["bound"], constraint_residual=worst_res))
    return out, [row]


def pohozaev_checks(chart, field, r_in, r_out, quad_order, panels, tol_scale):
    tf = radial_power_field(-1.0) if field == "scalar" else covector_power_field(0, -2.0)
    res = pohozaev_residual(chart, tf, r_in, r_out, quad_order=quad_order, panels=panels)
    label = f"{chart.spec()} {tf.label}"
    row = {"chart": chart.spec(), "field": tf.label, "r_in": r_in, "r_out": r_out, **{k: v for k, v in res.terms.items()}}
    row.update(error_estimate=res.error_estimate, rate=res.rate, nominal_rate=res.nominal_rate)
    out = [check(f"{label}: residual vs estimate", "pohozaev", res.within_estimate, abs(res.residual), 10 * res.error_estimate)]
    if np.isfinite(res.rate):
        lo, hi = 0.8 * res.nominal_rate, 1.2 * res.nominal_rate
        out.append(check(f"{label}: refinement rate", "pohozaev", lo <= res.rate <= hi, res.rate, [lo, hi]))
    else:
        thr = 1e-6 * tol_scale
        rel = abs(res.relative_residual)
        out.append(check(f"{label}: relative residual", "pohozaev", rel < thr, rel, thr))
    return out, [row]


def ode_checks(a, b, c0, f1, r_max, tol_scale):
    env = ode_envelope(a, b, c0, f1, r_max)
    row = {
        "a": a,
        "b": b,
        "C0": c0,
        "f1": f1,
        "r_max": r_max,
        "max_rel_error": env.max_rel_error,
        "tail_exponent": env.tail_exponent,
        "log_coefficient": env.log_coefficient,
        "log_ratio": env.log_ratio,
        "steps": len(env.grid) - 1,
    }
    name = f"ode a={a:g} b={b:g} C0={c0:g}"
    thr = 1e-6 * tol_scale
    out = [
        check(f"{name}: closed form", "ode", env.max_rel_error < thr, env.max_rel_error, thr),
        check(f"{name}: nonnegative", "ode", bool(np.all(env.f_numeric >= 0)), float(np.min(env.f_numeric)), 0.0),
    ]
    if a != b and c0 > 0:
        target = min(a, b)
        out.append(check(f"{name}: tail exponent", "ode", abs(env.tail_exponent - target) <= 0.02 * tol_scale, env.tail_exponent, target))
    elif a == b and c0 > 0:
        target = a * c0
        err = abs(env.log_coefficient / target - 1)
        out.append(check(f"{name}: log coefficient", "ode", err <= 0.01 * tol_scale, env.log_coefficient, target))
    return out, [row]


def volume_checks(m, p, a, r_min, r_max, count, tol_scale):
    profile = kahler_profile(m, p, a)
    radii = np.geomspace(r_min, r_max, count)
    fit = volume_expansion_fit(profile, radii)
    rows = [
        {"m": m, "p": p, "a": a, "r": r, "volume": v, "first_integral": e}
        for r, v, e in zip(fit.radii, fit.volumes, fit.first_integral)
    ]
    name = f"volume m={m} p={p} a={a:g}"
    lead = fit.lead_rel_error
    out = [check(f"{name}: c_lead", "volume_lead", lead <= 0.005 * tol_scale, fit.c_lead, fit.expected_lead, rel_error=lead)]
    if fit.expected_sub != 0:
        sub = fit.sub_rel_error
        out.append(check(f"{name}: c_sub", "volume_sub", sub <= 0.02 * tol_scale, fit.c_sub, fit.expected_sub, rel_error=sub))
    else:
        thr = 0.02 * tol_scale * sphere_area(2 * m - 1) * a ** (2 * (m - 1)) / 2
        out.append(check(f"{name}: c_sub", "volume_sub", abs(fit.c_sub) <= thr, fit.c_sub, 0.0, abs_threshold=thr))
    fi = float(np.max(np.abs(fit.volumes / fit.first_integral - 1)))
    out.append(check(f"{name}: first integral", "volume_first_integral", fi < 1e-8 * tol_scale, fi, 1e-8 * tol_scale))
    return out, rows, fit


# subcommands ---------------------------------------------------------------------
def _tolerances(args):
    if not (args.tol_scale > 0 and math.isfinite(args.tol_scale)):
        raise UsageError("--tol-scale must be a positive finite number")
    return {k: v * args.tol_scale for k, v in TOLERANCES.items()}


def cmd_curvature(args, tol):
    chart = build_chart(args.chart)
    rng = _rng(args.seed, 1)
    if args.point:
        try:
            pts = np.array([[float(v) for v in args.point.split(",")]])
        except ValueError:
            raise UsageError(f"bad --point {args.point!r}") from None
        if pts.shape[1] != chart.dim:
            raise UsageError(f"--point needs {chart.dim} coordinates")
    else:
        lo, hi = _default_radii(chart)
        lo = args.r_min if args.r_min is not None else lo
        hi = args.r_max if args.r_max is not None else hi
        if _family(chart) == "sphere":
            pts = chart.random_points(rng, args.points)
        else:
            pts = chart.random_points(rng, args.points, lo, hi)
    try:
        return curvature_checks(chart, pts, tol)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def cmd_decay(args, tol):
    chart = build_chart(args.chart)
    r0 = args.r0 if args.r0 is not None else 10.0 * chart.length_scale()
    return decay_checks(chart, args.quantity, r0, args.rho, args.rungs, args.samples, args.seed, args.tol_scale)


def cmd_inequality(args, tol):
    kinds = list(DEFAULT_DIMS) if args.kind == "all" else [args.kind]
    tasks = []
    for kind in kinds:
        dims = (args.n,) if args.n is not None else DEFAULT_DIMS[kind]
        for n in dims:
            tasks.append(lambda kind=kind, n=n: inequality_task(kind, n, args.seed, tol))
    return _merge(_parallel(args.jobs, tasks))


def cmd_pohozaev(args, tol):
    chart = build_chart(args.chart)
    scale = chart.length_scale()
    r_in = args.r_in if args.r_in is not None else 2.0 * scale
    r_out = args.r_out if args.r_out is not None else 4.0 * scale
    return pohozaev_checks(chart, args.field, r_in, r_out, args.quad_order, args.panels, args.tol_scale)


def cmd_ode(args, tol):
    return ode_checks(args.a, args.b, args.c0, args.f1, args.r_max, args.tol_scale)


def cmd_volume(args, tol):
    r_min = args.r_min if args.r_min is not None else 10.0 * args.a
    r_max = args.r_max if args.r_max is not None else 100.0 * args.a
    checks, rows, _ = volume_checks(args.m, args.p, args.a, r_min, r_max, args.count, args.tol_scale)
    return checks, rows


def _merge(parts):
    checks, rows = [], []
    for c, r in parts:
        checks.extend(c)
        rows.extend(r)
    return checks, rows


def verify_tasks(seed, tol, tol_scale):
    """The deterministic verification suite as a list of callables."""
    tasks = []

    def kahler_flat(m, p, a, salt):
        chart = kahler_chart(kahler_profile(m, p, a))
        pts = chart.random_points(_rng(seed, 10, salt), 50, 2 * a, 100 * a)
        checks, _ = curvature_checks(chart, pts, tol)
        return checks, []

    salt = 0
    for m in (2, 3):
        for p in sorted({1, m - 1, m, m + 1}):
            for a in (0.5, 1.0, 2.0):
                tasks.append(lambda m=m, p=p, a=a, s=salt: kahler_flat(m, p, a, s))
                salt += 1

    def other_charts(spec, salt, count=20):
        chart = build_chart(spec)
        rng = _rng(seed, 20, salt)
        if _family(chart) == "sphere":
            pts = chart.random_points(rng, count)
        else:
            pts = chart.random_points(rng, count, *_default_radii(chart))
        checks, _ = curvature_checks(chart, pts, tol)
        return checks, []

    specs = ["schwarzschild:n=4,mu=1", "schwarzschild:n=5,mu=1", "schwarzschild:n=6,mu=1",
             "flat:n=4", "flatpolar:n=3", "sphere:radius=1"]
    for i, spec in enumerate(specs):
        tasks.append(lambda spec=spec, i=i: other_charts(spec, i))

    decay_cases = [("kahler:m=2,p=1,a=1", "metric_deviation"), ("kahler:m=2,p=1,a=1", "rm_norm"),
                   ("kahler:m=2,p=2,a=1", "rm_norm"), ("kahler:m=3,p=1,a=1", "metric_deviation"),
                   ("kahler:m=3,p=1,a=1", "rm_norm"), ("kahler:m=3,p=3,a=1", "rm_norm"),
                   ("schwarzschild:n=4,mu=1", "metric_deviation"), ("schwarzschild:n=5,mu=1", "metric_deviation"),
                   ("schwarzschild:n=6,mu=1", "metric_deviation")]
    for i, (spec, q) in enumerate(decay_cases):
        tasks.append(lambda spec=spec, q=q, i=i: decay_checks(
            build_chart(spec), q, 10.0 * build_chart(spec).length_scale(), 2.0, 8, 16, seed + i, tol_scale))

    for kind in ("rm-deriv-divfree", "weyl-deriv-divfree", "kahler-ricci", "selfdual-ricci", "matrix-claim"):
        for n in DEFAULT_DIMS[kind]:
            tasks.append(lambda kind=kind, n=n: inequality_task(kind, n, seed, tol))

    tasks.append(lambda: pohozaev_checks(build_chart("flat:n=4"), "scalar", 1.0, 3.0, 3, 2, tol_scale))
    tasks.append(lambda: pohozaev_checks(build_chart("schwarzschild:n=4,mu=1"), "scalar", 2.0, 4.0, 3, 4, tol_scale))
    tasks.append(lambda: pohozaev_checks(build_chart("schwarzschild:n=4,mu=1"), "covector", 2.0, 4.0, 3, 4, tol_scale))

    for a, b in ((2, 3), (3, 2), (2, 2), (4, 4)):
        tasks.append(lambda a=a, b=b: ode_checks(a, b, 1.0, 1.0, 1e6, tol_scale))

    def volume_pair():
        c1, r1, f1 = volume_checks(2, 1, 1.0, 10.0, 100.0, 8, tol_scale)
        c3, r3, f3 = volume_checks(2, 3, 1.0, 10.0, 100.0, 8, tol_scale)
        flip = np.sign(f1.c_sub) != np.sign(f3.c_sub) and f1.c_sub != 0 and f3.c_sub != 0
        sign = check("volume m=2: sign flip p=1 vs p=3", "volume_sign", bool(flip), [f1.c_sub, f3.c_sub], "opposite signs")
        return c1 + c3 + [sign], []

    tasks.append(volume_pair)
    return tasks


def cmd_verify(args, tol):
    return _merge(_parallel(args.jobs, verify_tasks(args.seed, tol, args.tol_scale)))


# argument parsing ----------------------------------------------------------------
def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="64-bit seed for every random choice (default 0)")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by this factor")
    common.add_argument("--output", choices=("json", "csv"), default="json", help="report format")
    common.add_argument("--out", default=None, help="report path (written atomically); stdout if omitted")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")
    common.add_argument("--config", default=None, help="INI file; sections [common] and [<command>]")

    parser = argparse.ArgumentParser(prog="alecurv", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"alecurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    add("verify", cmd_verify, "run the deterministic verification suite")

    p = add("curvature", cmd_curvature, "curvature tensors and identities on a chart")
    p.add_argument("--chart", default="schwarzschild:n=4,mu=1", help="chart spec name:key=value,...")
    p.add_argument("--points", type=_positive_int, default=8, help="number of random points")
    p.add_argument("--point", default=None, help="comma-separated coordinates of a single point")
    p.add_argument("--r-min", type=float, default=None)
    p.add_argument("--r-max", type=float, default=None)

    p = add("decay", cmd_decay, "decay exponent over a geometric radius ladder")
    p.add_argument("--chart", default="kahler:m=2,p=1,a=1")
    p.add_argument("--quantity", choices=QUANTITIES, default="rm_norm")
    p.add_argument("--r0", type=float, default=None, help="innermost radius (default 10 x chart scale)")
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--rungs", type=int, default=8)
    p.add_argument("--samples", type=_positive_int, default=16, help="random directions per shell")

    p = add("inequality", cmd_inequality, "exact eigenvalue certificates of the directional inequalities")
    p.add_argument("--kind", choices=("all",) + KINDS + ("matrix-claim",), default="all")
    p.add_argument("--n", type=int, default=None, help="dimension n (m for kahler-ricci, d for matrix-claim)")

    p = add("pohozaev", cmd_pohozaev, "both sides of the Pohozaev identity on an annulus")
    p.add_argument("--chart", default="schwarzschild:n=4,mu=1")
    p.add_argument("--field", choices=("scalar", "covector"), default="scalar")
    p.add_argument("--r-in", type=float, default=None)
    p.add_argument("--r-out", type=float, default=None)
    p.add_argument("--quad-order", type=_positive_int, default=3, help="Gauss-Legendre nodes per panel")
    p.add_argument("--panels", type=_positive_int, default=4, help="panels per coordinate at the coarse level")

    p = add("ode", cmd_ode, "comparison ODE against its closed-form envelope")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--b", type=float, default=3.0)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--f1", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=1e6)

    p = add("volume", cmd_volume, "volume growth of the scalar-flat Kaehler family")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--r-min", type=float, default=None)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--count", type=int, default=8)
    return parser, sub


def _subparser(sub, name):
    return sub.choices[name]


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def load_config(path, command, subparser):
    """Defaults for ``command`` from an INI file; unknown keys are errors."""
    cfg = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    known = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config", "func")}
    values = {}
    for section in cfg.sections():
        if section != "common" and section not in _COMMANDS:
            raise UsageError(f"config {path!r}: unknown section [{section}]")
        for key, raw in cfg.items(section):
            dest = key.replace("-", "_")
            applies = section in ("common", command)
            if dest not in known:
                # keys of other sections are validated against their own command
                if applies or not _key_known(section, dest):
                    raise UsageError(f"config {path!r}: unknown key {key!r} in [{section}]")
                continue
            if applies:
                if known[dest].choices is not None and raw not in known[dest].choices:
                    raise UsageError(f"config {path!r}: bad value {raw!r} for {key}")
                values[dest] = raw
    return values


_COMMANDS = ("verify", "curvature", "decay", "inequality", "pohozaev", "ode", "volume")


def _key_known(section, dest):
    _, sub = build_parser()
    return any(a.dest == dest for a in sub.choices[section]._actions)


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(sub, args.command)
        defaults = load_config(args.config, args.command, sp)
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"alecurv: error: {exc}", file=sys.stderr)
        return 2
    try:
        tol = _tolerances(args)
        checks, rows = args.func(args, tol)
    except UsageError as exc:
        print(f"alecurv: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, DomainError) as exc:
        print(f"alecurv: error: {exc}", file=sys.stderr)
        return 2
    report = build_report(args.command, args, tol, checks, rows)
    text = render(report, args.output)
    if args.out:
        write_atomic(args.out, text)
        for c in report["checks"]:
            print(f"{c['status'].upper():4s}  {c['name']}")
    else:
        sys.stdout.write(text)
    for name in report["failed"]:
        print(f"alecurv: check failed: {name}", file=sys.stderr)
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
