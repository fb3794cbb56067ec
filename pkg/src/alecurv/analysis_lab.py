"""Decay exponents, the Pohozaev identity, the ODE comparison envelope and
volume growth of the Kähler family.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .curvature_engine import _coordinate_curvature, curvature_batch
from .jets import Jet
from . import jets as jt
from .metric_zoo import KahlerChart, sphere_area

__all__ = [
    "QUANTITIES",
    "DecayFit",
    "DecaySignalError",
    "decay_fit",
    "shell_quantity",
    "TensorField",
    "radial_power_field",
    "covector_power_field",
    "constant_field",
    "PohozaevResult",
    "QuadratureError",
    "pohozaev_terms",
    "pohozaev_residual",
    "OdeEnvelope",
    "ode_envelope",
    "ode_closed_form",
    "VolumeFit",
    "kahler_volume",
    "volume_expansion_fit",
]

QUANTITIES = ("metric_deviation", "rm_norm", "rc_norm", "grad_rm_norm", "delta_rm_norm")
UNDERFLOW = 1e-300
# values within this factor of the rounding floor carry no signal
NOISE_FACTOR = 1e3 * np.finfo(float).eps


class DecaySignalError(ValueError):
    """Too few usable rungs to fit a decay exponent."""


# decay ------------------------------------------------------------------------
@dataclass(frozen=True)
class DecayFit:
    """Power-law fit ``quantity ~ r^{-exponent}`` over shell maxima."""

    quantity: str
    radii: np.ndarray
    values: np.ndarray
    used: np.ndarray
    exponent: float
    stderr: float
    samples_per_shell: int
    flag: str = "ok"
    intercept: float = float("nan")

    def as_row(self):
        return {
            "quantity": self.quantity,
            "r0": float(self.radii[0]),
            "rho": float(self.radii[1] / self.radii[0]),
            "rungs": int(len(self.radii)),
            "exponent": self.exponent,
            "stderr": self.stderr,
            "used_rungs": int(np.sum(self.used)),
            "flag": self.flag,
        }


def _norm(t):
    return np.sqrt(np.sum(t.reshape(t.shape[0], -1) ** 2, axis=1))


def shell_quantity(chart, points, quantity):
    """Quantity values at points; entries at the rounding floor become 0."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {', '.join(QUANTITIES)}")
    if quantity == "metric_deviation":
        d = chart.deviation(points)
        return _norm(d)
    deriv = quantity in ("grad_rm_norm", "delta_rm_norm")
    b = curvature_batch(chart, points, derivatives=deriv)
    key = {"rm_norm": "rm", "rc_norm": "rc", "grad_rm_norm": "grad_rm", "delta_rm_norm": "div_rm"}[quantity]
    vals = _norm(b[key])
    floor = b["grad_floor"] if deriv else b["rm_floor"]
    return np.where(vals > NOISE_FACTOR * floor, vals, 0.0)


def decay_fit(chart, quantity, r0, rho, rungs, samples, seed=0, curvature_tol=0.1):
    """Fit a decay exponent over a geometric radius ladder.

    Each shell value is the max of ``quantity`` over ``samples`` random
    directions at radius ``r0 * rho**k``.  The innermost rung is dropped
    while the second difference of the log-values at the inner end exceeds
    ``curvature_tol`` (pre-asymptotic bias).  Shells below the underflow or
    rounding floor are dropped with a warning; if none remain the fit is
    flagged ``"no decay signal"``.
    """
    if rungs < 6:
        raise ValueError("the ladder needs at least 6 rungs")
    if not (r0 > 0 and rho > 1):
        raise ValueError("need r0 > 0 and rho > 1")
    rng = np.random.default_rng(seed)
    radii = r0 * rho ** np.arange(rungs)
    values = np.empty(rungs)
    for k, r in enumerate(radii):
        pts = chart.random_points(rng, samples, r, r)
        values[k] = np.max(shell_quantity(chart, pts, quantity))
    used = np.isfinite(values) & (values > UNDERFLOW)
    if not np.all(used):
        warnings.warn(f"{quantity}: {int(np.sum(~used))} shell(s) below the signal floor dropped", RuntimeWarning)
    if not np.any(used):
        return DecayFit(quantity, radii, values, used, float("nan"), float("nan"), samples, "no decay signal")
    if np.sum(used) < 4:
        raise DecaySignalError(f"{quantity}: only {int(np.sum(used))} usable rungs")
    logs = np.log(np.where(used, values, 1.0))
    idx = list(np.flatnonzero(used))
    while len(idx) > 4:
        a, b, c = idx[:3]
        if abs(logs[a] - 2 * logs[b] + logs[c]) > curvature_tol:
            used[a] = False
            idx.pop(0)
        else:
            break
    fit = stats.linregress(np.log(radii[used]), logs[used])
    return DecayFit(quantity, radii, values, used, float(-fit.slope), float(fit.stderr), samples, "ok", float(fit.intercept))


# Pohozaev -------------------------------------------------------------------------
@dataclass(frozen=True)
class TensorField:
    """Covariant tensor field given by a jet-evaluable formula.

    ``func`` maps a jet of points ``(B, n)`` to a jet of shape
    ``(B,) + (n,) * rank``.
    """

    rank: int
    func: object = field(repr=False)
    label: str = ""

    def jets(self, points, order=2):
        x = Jet.variables(points, order=order)
        out = self.func(x)
        return [out.trailing(k) for k in range(order + 1)]


def radial_power_field(power=-1.0):
    """Scalar ``|x|^power``."""
    return TensorField(0, lambda x: jt.power((x * x).sum(-1), power / 2.0), f"|x|^{power}")


def covector_power_field(axis=0, power=-2.0):
    """Covector ``T_a = delta_{a,axis} |x|^power``."""

    def func(x):
        dim = x.shape[-1]
        e = np.zeros(dim)
        e[axis] = 1.0
        return jt.power((x * x).sum(-1), power / 2.0)[..., None] * e

    return TensorField(1, func, f"e_{axis + 1} |x|^{power}")


def constant_field(values):
    """Constant components (in coordinates)."""
    values = np.asarray(values, dtype=float)

    def func(x):
        full = np.broadcast_to(values, x.shape[:-1] + values.shape).copy()
        return Jet.constant(full, x.nvar, x.order)

    return TensorField(values.ndim, func, "constant")


def _slot_correction(gam, t, first):
    """``sum_s Gamma^p_{k a_s} t[..p..]`` over slots ``first..q-1``.

    ``t`` has shape ``(B,) + (n,) * q``; the result gains the derivative
    index ``k`` right after the batch axis.
    """
    q = t.ndim - 1
    out = 0.0
    for s in range(first, q):
        moved = np.moveaxis(t, 1 + s, -1)  # (B, ..., p)
        term = np.einsum("bpka,b...p->bk...a", gam, moved)
        out = out + np.moveaxis(term, -1, 2 + s)
    return out


def _covariant_terms(field_jets, metric_jets, points):
    """Covariant derivatives of the field and curvature commutator data."""
    tv, dtv, d2tv = field_jets  # derivative axes trailing
    g, dg, d2g = metric_jets
    geo = _coordinate_curvature(g, dg, d2g)
    gam, dgam, ginv, rm = geo["gamma"], geo["dgamma"], geo["ginv"], geo["rm"]
    q = tv.ndim - 1
    # derivative index first after batch
    dt = np.moveaxis(dtv, -1, 1)  # (B, k, a...)
    d2t = np.moveaxis(np.moveaxis(d2tv, -1, 1), -1, 1)  # (B, i, k, a...)
    corr = _slot_correction(gam, tv, 0) if q else 0.0
    nabla = dt - corr  # (B, k, a...)
    # d_i of the correction: sum_s (d_i Gamma^p_{k a_s} T_p + Gamma^p_{k a_s} d_i T_p)
    dcorr = 0.0
    for s in range(q):
        moved = np.moveaxis(tv, 1 + s, -1)
        term = np.einsum("bpkai,b...p->bik...a", dgam, moved)
        dcorr = dcorr + np.moveaxis(term, -1, 3 + s)
        moved_d = np.moveaxis(dt, 2 + s, -1)  # (B, i, ..., p)
        term = np.einsum("bpka,bi...p->bik...a", gam, moved_d)
        dcorr = dcorr + np.moveaxis(term, -1, 3 + s)
    d_nabla = d2t - dcorr  # (B, i, k, a...)
    # covariant correction on the rank q+1 tensor nabla
    nabla2 = d_nabla - _slot_correction(gam, nabla, 0)
    # commutator [nabla_i, nabla_k] T_a = - g^{cb} R_{ikca} T_b per slot
    comm = 0.0
    for s in range(q):
        moved = np.moveaxis(tv, 1 + s, -1)
        raised = np.einsum("bcp,b...p->b...c", ginv, moved)
        term = -np.einsum("bikca,b...c->bik...a", rm, raised)
        comm = comm + np.moveaxis(term, -1, 3 + s)
    return {
        "geo": geo,
        "nabla": nabla,
        "nabla2": nabla2,
        "commutator": comm if q else np.zeros_like(nabla2),
        "rank": q,
    }


def _inner(s1, s2, ginv):
    """Metric inner product over all non-batch slots."""
    out = s2
    for slot in range(1, s2.ndim):
        out = np.moveaxis(np.einsum("bij,b...j->b...i", ginv, np.moveaxis(out, slot, -1)), -1, slot)
    return np.sum((s1 * out).reshape(s1.shape[0], -1), axis=1)


def pohozaev_integrands(chart, tfield, points):
    """Pointwise integrands (per unit coordinate volume) of every term."""
    x = np.asarray(points, dtype=float)
    mj = chart.jets(x, order=2)
    fj = tfield.jets(x, order=2)
    c = _covariant_terms(fj, mj, x)
    g = mj[0]
    ginv = c["geo"]["ginv"]
    gam = c["geo"]["gamma"]
    sqrt_det = np.sqrt(np.linalg.det(g))
    nabla, nabla2 = c["nabla"], c["nabla2"]
    lap = np.einsum("bik,bik...->b...", ginv, nabla2)
    nabla_x = np.einsum("bk,bk...->b...", x, nabla)
    grad_sq = _inner(nabla, nabla, ginv)
    lhs = _inner_rank(lap, nabla_x, ginv)
    n = x.shape[1]
    kmat = np.einsum("bkij,bj->bki", gam, x)  # K^k_i = Gamma^k_{ij} x^j
    tr_k = np.einsum("bkk->b", kmat)
    # g^{ij} K^k_i <nabla_j T, nabla_k T>
    pair = _pair_inner(nabla, nabla, ginv)  # (B, j, k)
    kterm = np.einsum("bij,bki,bjk->b", ginv, kmat, pair)
    gamma_term = 0.5 * tr_k * grad_sq - kterm
    # - X^k g^{ij} <nabla_j T, [nabla_i, nabla_k] T>
    comm = c["commutator"]
    pc = _pair_inner(nabla, comm.reshape((comm.shape[0], n * n) + comm.shape[3:]), ginv).reshape(-1, n, n, n)
    rm_term = -np.einsum("bk,bij,bjik->b", x, ginv, pc)
    bulk = 0.5 * (n - 2) * grad_sq
    return {
        "lhs": lhs * sqrt_det,
        "bulk": bulk * sqrt_det,
        "gamma_term": gamma_term * sqrt_det,
        "rm_term": rm_term * sqrt_det,
        "_nabla": nabla,
        "_nabla_x": nabla_x,
        "_grad_sq": grad_sq,
        "_ginv": ginv,
        "_sqrt_det": sqrt_det,
        "_nabla2": nabla2,
        "_commutator": comm,
    }


def _inner_rank(s1, s2, ginv):
    """Inner product of two rank-q batches (q may be 0)."""
    if s1.ndim == 1:
        return s1 * s2
    return _inner(s1, s2, ginv)


def _pair_inner(s1, s2, ginv):
    """``<s1[:, j], s2[:, k]>`` over the trailing slots, shape ``(B, J, K)``."""
    if s1.ndim == 2:
        return s1[:, :, None] * s2[:, None, :]
    out = s2
    for slot in range(2, s2.ndim):
        out = np.moveaxis(np.einsum("bij,b...j->b...i", ginv, np.moveaxis(out, slot, -1)), -1, slot)
    a = s1.reshape(s1.shape[0], s1.shape[1], -1)
    b = out.reshape(out.shape[0], out.shape[1], -1)
    return np.einsum("bjx,bkx->bjk", a, b)


def _boundary_integrand(chart, tfield, points):
    """``<nabla_nu T, nabla_X T> - 1/2 <X, nu> |nabla T|^2`` times area density."""
    data = pohozaev_integrands(chart, tfield, points)
    x = np.asarray(points, dtype=float)
    r = np.linalg.norm(x, axis=1)
    dr = x / r[:, None]
    ginv = data["_ginv"]
    dr_norm = np.sqrt(np.einsum("bi,bij,bj->b", dr, ginv, dr))
    nu = np.einsum("bij,bj->bi", ginv, dr) / dr_norm[:, None]
    nabla_nu = np.einsum("bk,bk...->b...", nu, data["_nabla"])
    g = np.linalg.inv(ginv)
    x_dot_nu = np.einsum("bi,bij,bj->b", x, g, nu)
    val = _inner_rank(nabla_nu, data["_nabla_x"], ginv) - 0.5 * x_dot_nu * data["_grad_sq"]
    return val * data["_sqrt_det"] * dr_norm


class QuadratureError(RuntimeError):
    """Quadrature failed to converge across refinement levels."""


def _gl_panels(lo, hi, panels, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
    w = (half[:, None] * weights[None, :]).reshape(-1)
    return x, w


def sphere_rule(n, panels, order, phi_points):
    """Unit vectors and weights on S^{n-1} (hyperspherical angles)."""
    grids, wts = [], []
    for j in range(n - 2):
        th, w = _gl_panels(0.0, np.pi, panels, order)
        grids.append(th)
        wts.append(w * np.sin(th) ** (n - 2 - j))
    phi = 2 * np.pi * np.arange(phi_points) / phi_points
    grids.append(phi)
    wts.append(np.full(phi_points, 2 * np.pi / phi_points))
    mesh = np.meshgrid(*grids, indexing="ij")
    wmesh = np.meshgrid(*wts, indexing="ij")
    weight = np.prod(np.stack([m.reshape(-1) for m in wmesh]), axis=0)
    ang = [m.reshape(-1) for m in mesh]
    pts = np.empty((weight.size, n))
    sin_prod = np.ones(weight.size)
    for j in range(n - 2):
        pts[:, j] = sin_prod * np.cos(ang[j])
        sin_prod = sin_prod * np.sin(ang[j])
    pts[:, n - 2] = sin_prod * np.cos(ang[-1])
    pts[:, n - 1] = sin_prod * np.sin(ang[-1])
    return pts, weight


@dataclass(frozen=True)
class PohozaevResult:
    terms: dict
    residual: float
    relative_residual: float
    error_estimate: float
    rate: float
    nominal_rate: float
    levels: list = field(repr=False, default_factory=list)

    @property
    def within_estimate(self):
        return abs(self.residual) <= 10 * self.error_estimate


def pohozaev_terms(chart, tfield, r_in, r_out, panels=4, order=3, phi_points=8, chunk=2048):
    """Integrate every term of the identity on one mesh.

    ``panels`` Gauss-Legendre panels of ``order`` nodes are used in the
    radius and in each polar angle; the azimuth uses the periodic
    trapezoid rule with ``phi_points`` nodes.
    """
    n = chart.dim
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    rr, rw = _gl_panels(r_in, r_out, panels, order)
    dirs, sw = sphere_rule(n, panels, order, phi_points)
    sums = dict.fromkeys(("lhs", "bulk", "gamma_term", "rm_term"), 0.0)
    # bulk: radial x angular tensor product, chunked
    pts = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    wts = (rw[:, None] * rr[:, None] ** (n - 1) * sw[None, :]).reshape(-1)
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        data = pohozaev_integrands(chart, tfield, pts[sl])
        for key in sums:
            sums[key] += float(np.dot(data[key], wts[sl]))
    bnd = {}
    for label, radius in (("boundary_out", r_out), ("boundary_in", r_in)):
        total = 0.0
        bpts = radius * dirs
        for start in range(0, len(bpts), chunk):
            sl = slice(start, start + chunk)
            total += float(np.dot(_boundary_integrand(chart, tfield, bpts[sl]), sw[sl] * radius ** (n - 1)))
        bnd[label] = total
    terms = dict(sums)
    terms.update(bnd)
    terms["boundary"] = bnd["boundary_out"] - bnd["boundary_in"]
    terms["rhs"] = terms["bulk"] + terms["gamma_term"] + terms["rm_term"] + terms["boundary"]
    terms["residual"] = terms["lhs"] - terms["rhs"]
    return terms


def pohozaev_residual(chart, tfield, r_in, r_out, quad_order=3, panels=4, phi_points=8, check=True):
    """Both sides of the Pohozaev identity at two mesh levels.

    The identity, for the Euler field ``X = x^p d_p`` and
    ``K^k_i = Gamma^k_{ij} x^j``, reads

        int <Lap T, nabla_X T> = int (n-2)/2 |nabla T|^2
            + int [1/2 tr(K) |nabla T|^2 - g^{ij} K^k_i <nabla_j T, nabla_k T>]
            - int X^k g^{ij} <nabla_j T, [nabla_i, nabla_k] T>
            + boundary terms <nabla_nu T, nabla_X T> - 1/2 <X, nu> |nabla T|^2.

    The error estimate is the change of every term between ``panels`` and
    ``2 * panels``; ``rate`` is the observed order of the residual.
    """
    coarse = pohozaev_terms(chart, tfield, r_in, r_out, panels, quad_order, phi_points)
    fine = pohozaev_terms(chart, tfield, r_in, r_out, 2 * panels, quad_order, 2 * phi_points)
    keys = ("lhs", "bulk", "gamma_term", "rm_term", "boundary")
    scale = max(max(abs(fine[k]) for k in keys), 1e-300)
    estimate = max(abs(fine[k] - coarse[k]) for k in keys)
    rc, rf = abs(coarse["residual"]), abs(fine["residual"])
    noise = 64 * np.finfo(float).eps * scale
    rate = float(np.log2(rc / rf)) if rf > noise and rc > noise else float("nan")
    if check and estimate > 0.5 * scale and estimate > noise:
        raise QuadratureError(f"quadrature did not converge: term changes {estimate:.3e} vs scale {scale:.3e}")
    return PohozaevResult(
        terms=fine,
        residual=fine["residual"],
        relative_residual=fine["residual"] / scale,
        error_estimate=max(estimate, noise),
        rate=rate,
        nominal_rate=2.0 * quad_order,
        levels=[coarse, fine],
    )


# ODE comparison ------------------------------------------------------------------
@dataclass(frozen=True)
class OdeEnvelope:
    a: float
    b: float
    C0: float
    f1: float
    grid: np.ndarray
    f_numeric: np.ndarray
    f_closed: np.ndarray
    max_rel_error: float
    tail_exponent: float
    log_coefficient: float
    log_ratio: float


def ode_closed_form(a, b, C0, f1, r):
    """Solution of ``f' = -(a/r) f + (a/r) C0 r^{-b}`` with ``f(1) = f1``."""
    r = np.asarray(r, dtype=float)
    if a == b:
        return r ** (-a) * (f1 + a * C0 * np.log(r))
    lam = a * C0 / (a - b)
    return (f1 - lam) * r ** (-a) + lam * r ** (-b)


def _rk4(fun, s, f, h):
    k1 = fun(s, f)
    k2 = fun(s + h / 2, f + h / 2 * k1)
    k3 = fun(s + h / 2, f + h / 2 * k2)
    k4 = fun(s + h, f + h * k3)
    return f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def ode_envelope(a, b, C0, f1, r_max, rtol=1e-11, h0=0.01):
    """Integrate the saturated comparison ODE in ``s = ln r``.

    Classical RK4 with step-doubling error control; the state is ``f``
    and ``df/ds = -a f + a C0 e^{-b s}``.
    """
    if not (a > 0 and b > 0 and C0 >= 0 and f1 >= 0 and r_max > 1):
        raise ValueError("need a, b > 0, C0, f1 >= 0 and r_max > 1")

    def fun(s, f):
        return -a * f + a * C0 * np.exp(-b * s)

    s_end = np.log(r_max)
    s, f, h = 0.0, float(f1), h0
    grid, vals = [0.0], [f]
    while s < s_end:
        h = min(h, s_end - s)
        big = _rk4(fun, s, f, h)
        half = _rk4(fun, s, f, h / 2)
        small = _rk4(fun, s + h / 2, half, h / 2)
        err = abs(small - big) / 15
        scale = max(abs(small), 1e-300)
        # values below ~1e-290 are indistinguishable from zero here
        allowed = max(rtol * scale, 1e-290)
        if err <= allowed or h < 1e-10:
            s += h
            f = small + (small - big) / 15
            grid.append(s)
            vals.append(f)
            h = min(h * min(2.0, 0.9 * (allowed / max(err, 1e-300)) ** 0.2), 0.5)
        else:
            h *= max(0.2, 0.9 * (allowed / err) ** 0.2)
    r = np.exp(np.array(grid))
    fn = np.array(vals)
    fc = ode_closed_form(a, b, C0, f1, r)
    pos = np.abs(fc) > 1e-280
    rel = float(np.max(np.abs(fn[pos] - fc[pos]) / np.abs(fc[pos]))) if np.any(pos) else float(np.max(np.abs(fn)))
    # tail exponent over the last decade, log coefficient from the last steps
    tail = r >= r_max / 10
    if np.sum(tail) >= 2 and np.all(fn[tail] > 0):
        tail_exp = float(-np.polyfit(np.log(r[tail]), np.log(fn[tail]), 1)[0])
    else:
        tail_exp = float("nan")
    # coefficient of r^{-a} ln r: slope of f r^a against ln r at the end
    scaled = fn * r**a
    log_coef = float((scaled[-1] - scaled[-2]) / (np.log(r[-1]) - np.log(r[-2])))
    log_ratio = float(scaled[-1] / np.log(r[-1]))
    return OdeEnvelope(a, b, C0, f1, r, fn, fc, rel, tail_exp, log_coef, log_ratio)


# volume --------------------------------------------------------------------------
@dataclass(frozen=True)
class VolumeFit:
    c_lead: float
    c_sub: float
    radii: np.ndarray
    volumes: np.ndarray
    fit_residual: float
    expected_lead: float
    expected_sub: float
    first_integral: np.ndarray = field(repr=False, default=None)

    @property
    def lead_rel_error(self):
        return abs(self.c_lead / self.expected_lead - 1.0)

    @property
    def sub_rel_error(self):
        if self.expected_sub == 0:
            return abs(self.c_sub)
        return abs(self.c_sub / self.expected_sub - 1.0)


def kahler_volume(profile, r, panels=48, order=16):
    """Riemannian volume of ``{rho <= r}`` with ``rho^2 = y(u)``.

    The volume form is ``sqrt(det g)`` of the real chart metric, sampled
    along a coordinate ray (it is U(m)-invariant) and integrated in the
    Euclidean radius ``|z|`` on geometric Gauss-Legendre panels.  The tiny
    ball inside the chart guard is added from its leading-order term.
    """
    chart = KahlerChart(profile)
    m = profile.m
    n = 2 * m
    r = np.atleast_1d(np.asarray(r, dtype=float))
    area = sphere_area(n - 1)
    guard = 2 * chart.guard_factor * profile.a if profile.a > 0 else 0.0
    out = np.empty_like(r)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    for idx, rad in enumerate(r):
        big = np.sqrt(profile.volume_radius_u(rad))
        lo = guard if guard > 0 else big * 1e-12
        edges = np.geomspace(lo, big, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * nodes).reshape(-1)
        w = (half[:, None] * weights).reshape(-1)
        pts = np.zeros((s.size, n))
        pts[:, 0] = s
        dens = np.sqrt(np.linalg.det(chart.metric(pts)))
        total = np.dot(dens * s ** (n - 1), w)
        # inner ball: density ~ c s^{-2(m-1)}, integrand ~ c s, contributes c lo^2 / 2
        c_in = dens[0] * s[0] ** (2 * (m - 1))
        total += c_in * lo**2 / 2
        out[idx] = area * total
    return out


def volume_expansion_fit(profile, r_list, panels=48, order=16):
    """Least-squares fit ``Vol(r) = c_lead r^{2m} + c_sub r^2`` over radii."""
    r = np.asarray(r_list, dtype=float)
    m = profile.m
    vol = kahler_volume(profile, r, panels, order)
    design = np.stack([r ** (2 * m), r**2], axis=1)
    colscale = np.max(np.abs(design), axis=0)
    coef, *_ = np.linalg.lstsq(design / colscale, vol, rcond=None)
    coef = coef / colscale
    resid = vol - design @ coef
    area = sphere_area(2 * m - 1)
    # first integral of the ODE: det g_C = (y/u)^{m-1} y' integrates to (r^{2m} - a^{2m}) / (2m)
    exact = area * (r ** (2 * m) - profile.a ** (2 * m)) / (2 * m)
    return VolumeFit(
        c_lead=float(coef[0]),
        c_sub=float(coef[1]),
        radii=r,
        volumes=vol,
        fit_residual=float(np.max(np.abs(resid) / vol)),
        expected_lead=area / (2 * m),
        expected_sub=0.5 * (m - 1.5) * profile.alpha * area,
        first_integral=exact,
    )
