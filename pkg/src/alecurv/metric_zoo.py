"""Explicit coordinate metrics: flat charts, Schwarzschild and the scalar-flat
Kähler family.

Every chart stores its metric as ``g = I + D`` and evaluates the deviation
``D`` through jet arithmetic, so the same formula yields values and exact
partial derivatives to third order.  Keeping ``D`` separate avoids losing
the small deviation to cancellation against the identity far out.

The Kähler family lives on C^m = R^{2m} with ``z_i = x_i + i x_{m+i}``.
Its Kähler potential has ``phi'(u) = y(u)/u`` with ``u = |z|^2`` and a
profile ``y`` solving

    y^m + alpha*y + beta = u * y^(m-1) * y'.

Internally the profile is tracked through ``v = y - u`` which stays
bounded at infinity and keeps ``phi' - 1 = v/u`` free of cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import jets
from .jets import Jet
from .tensor_core import MAX_DIM

__all__ = [
    "DomainError",
    "ProfileError",
    "MetricChart",
    "FlatChart",
    "PolarFlatChart",
    "RoundSphereChart",
    "SchwarzschildChart",
    "KahlerChart",
    "KahlerProfile",
    "flat_chart",
    "schwarzschild_chart",
    "kahler_profile",
    "profile_y_of_u",
    "kahler_chart",
    "sphere_area",
    "CHART_FAMILIES",
]


class DomainError(ValueError):
    """A coordinate point lies outside a chart's domain."""


class ProfileError(RuntimeError):
    """The profile root-finder failed; carries the last bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


def sphere_area(k):
    """Area of the unit sphere S^k in R^{k+1}."""
    return 2 * pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


# charts -----------------------------------------------------------------------
class MetricChart:
    """Coordinate metric field with exact jets to order three.

    Subclasses implement :meth:`deviation_jet` and :meth:`contains`.
    """

    name = "chart"

    def spec(self):
        """Chart spec string understood by the command line."""
        return self.name

    def contains(self, x):
        """Boolean mask of points inside the domain."""
        x = np.asarray(x, dtype=float)
        return np.all(np.isfinite(x), axis=-1)

    def deviation_jet(self, X):
        raise NotImplementedError

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected points with {self.dim} coordinates, got shape {x.shape}")
        pts = x.reshape(-1, self.dim)
        inside = self.contains(pts)
        if not np.all(inside):
            bad = pts[np.argmin(inside)]
            raise DomainError(f"{self.spec()}: point {bad.tolist()} outside the domain")
        return pts

    def deviation(self, x):
        """``g(x) - I`` for points of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        pts = self._points(x)
        d = self.deviation_jet(Jet.variables(pts, order=0)).value
        return d.reshape(x.shape[:-1] + (self.dim, self.dim))

    def metric(self, x):
        return self.deviation(x) + np.eye(self.dim)

    def jets(self, x, order=3):
        """Metric and partials with derivative axes trailing.

        Returns a list ``[g, dg, d2g, d3g][:order + 1]`` where
        ``dg[..., i, j, a] = d_a g_ij`` and so on.
        """
        x = np.asarray(x, dtype=float)
        pts = self._points(x)
        dev = self.deviation_jet(Jet.variables(pts, order=order))
        lead = x.shape[:-1]
        out = []
        for k in range(order + 1):
            arr = dev.trailing(k) if k < len(dev.c) else np.zeros((len(pts), self.dim, self.dim) + (self.dim,) * k)
            if k == 0:
                arr = arr + np.eye(self.dim)
            out.append(np.ascontiguousarray(arr).reshape(lead + (self.dim, self.dim) + (self.dim,) * k))
        return out

    def radius(self, x):
        """Euclidean coordinate radius used for decay ladders."""
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)

    def length_scale(self):
        """Characteristic size of the geometry (sets guard radii and steps)."""
        return 1.0

    def random_points(self, rng, count, r_min, r_max):
        """Points with uniformly random direction and log-uniform radius."""
        dirs = rng.standard_normal((count, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=count))
        return dirs * radii[:, None]


def _check_dim(n, lo=2, hi=MAX_DIM):
    if not isinstance(n, (int, np.integer)) or not lo <= n <= hi:
        raise ValueError(f"dimension n={n!r} must be an integer in {lo}..{hi}")
    return int(n)


@dataclass(frozen=True)
class FlatChart(MetricChart):
    """Cartesian Euclidean space."""

    dim: int
    name = "flat"

    def spec(self):
        return f"flat:n={self.dim}"

    def deviation_jet(self, X):
        return X[..., :1, None] * np.zeros((self.dim, self.dim))


@dataclass(frozen=True)
class PolarFlatChart(MetricChart):
    """Euclidean space with polar coordinates ``(r, theta)`` in the first plane.

    The metric is ``diag(1, r^2, 1, ..., 1)``; Christoffel symbols are
    nonzero while the curvature vanishes.
    """

    dim: int
    name = "flatpolar"

    def spec(self):
        return f"flatpolar:n={self.dim}"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return super().contains(x) & (x[..., 0] > 0)

    def deviation_jet(self, X):
        e = np.zeros((self.dim, self.dim))
        e[1, 1] = 1.0
        r = X[..., 0]
        return (r * r - 1.0)[..., None, None] * e

    def random_points(self, rng, count, r_min, r_max):
        pts = rng.uniform(-np.pi, np.pi, size=(count, self.dim))
        pts[:, 0] = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=count))
        return pts


@dataclass(frozen=True)
class RoundSphereChart(MetricChart):
    """Round 2-sphere of radius ``radius`` in coordinates ``(theta, phi)``."""

    radius_: float = 1.0
    dim = 2
    name = "sphere"

    def spec(self):
        return f"sphere:radius={self.radius_!r}"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return super().contains(x) & (x[..., 0] > 0) & (x[..., 0] < np.pi)

    def deviation_jet(self, X):
        s = jets.sin(X[..., 0])
        rr = self.radius_**2
        e0 = np.diag([1.0, 0.0])
        e1 = np.diag([0.0, 1.0])
        return (s * s * rr - 1.0)[..., None, None] * e1 + (rr - 1.0) * e0

    def random_points(self, rng, count, r_min=0.3, r_max=2.8):
        th = rng.uniform(max(r_min, 1e-3), min(r_max, np.pi - 1e-3), size=count)
        ph = rng.uniform(-np.pi, np.pi, size=count)
        return np.stack([th, ph], axis=1)


@dataclass(frozen=True)
class SchwarzschildChart(MetricChart):
    """Conformally flat ``(1 + mu |x|^{2-n})^{4/(n-2)} dx^2`` on a punctured ball."""

    dim: int
    mu: float
    name = "schwarzschild"
    guard = 1e-6

    def __post_init__(self):
        _check_dim(self.dim, 3)
        if not np.isfinite(self.mu) or self.mu < 0:
            raise ValueError(f"mu={self.mu!r} must be a finite nonnegative real")

    def spec(self):
        return f"schwarzschild:n={self.dim},mu={self.mu!r}"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return super().contains(x) & (np.linalg.norm(x, axis=-1) > self.guard)

    def length_scale(self):
        return max(self.mu, 1e-300) ** (1.0 / (self.dim - 2)) if self.mu > 0 else 1.0

    def conformal_factor(self, r):
        n = self.dim
        return (1 + self.mu * np.asarray(r, dtype=float) ** (2 - n)) ** (4 / (n - 2))

    def deviation_jet(self, X):
        n = self.dim
        s2 = (X * X).sum(-1)
        w = self.mu * jets.power(s2, -(n - 2) / 2)
        factor = jets.expm1((4.0 / (n - 2)) * jets.log1p(w))
        return factor[..., None, None] * np.eye(n)


# Kähler profile -------------------------------------------------------------------
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _gauss_panels(edges):
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (_GL_NODES + 1))
        weights.append(half * _GL_WEIGHTS)
    return np.concatenate(nodes), np.concatenate(weights)


_TAIL_NODES, _TAIL_WEIGHTS = _gauss_panels([0.0, 0.25, 0.5, 1.0])
_SWITCH = 2.0  # scaled y above which the tail integral is used directly


class _ScaledInverter:
    """Solve ln u = ln y + I(y) for ``a = 1``; I is the tail integral

        I(y) = int_y^inf (alpha t + beta) / (t P(t)) dt,   P(t) = t^m + alpha t + beta,

    which normalizes y/u -> 1 at infinity.  Near the root ``y = 1`` the
    simple pole is subtracted analytically, leaving the regular remainder
    ``int g`` with ``g = Nhat / (p t Q)``.
    """

    def __init__(self, m, p):
        self.m, self.p = m, p
        self.alpha, self.beta = float(p - m), float(m - 1 - p)
        # ascending coefficient arrays
        pc = np.zeros(m + 1)
        pc[m], pc[1], pc[0] = 1.0, self.alpha, self.beta
        self.q_coef, rem = npoly.polydiv(pc, [-1.0, 1.0])
        if abs(rem[0]) > 1e-12:
            raise AssertionError("y = a^2 must be a root of the profile polynomial")
        ncoef = npoly.polyadd(p * np.array([self.beta, self.alpha]), self.q_coef)
        self.nhat_coef, rem = npoly.polydiv(ncoef, [-1.0, 1.0])
        if abs(rem[0]) > 1e-10:
            raise AssertionError("pole subtraction residue mismatch")
        self.rem_at_switch = self.tail(np.array([_SWITCH]))[0] + np.log(_SWITCH) / p
        self.log_c0 = self.rem_at_switch + self._regular(np.array([1.0]))[0]

    def tail(self, y):
        """I(y) for y >= 2 via t = y/s, free of overflow."""
        m, al, be = self.m, self.alpha, self.beta
        s = _TAIL_NODES[None, :]
        yy = y[:, None]
        num = (al * yy + be * s) * s ** (m - 2)
        den = yy**m + al * yy * s ** (m - 1) + be * s**m
        return (num / den) @ _TAIL_WEIGHTS

    def _regular(self, y):
        """int_y^2 Nhat(t) / (p t Q(t)) dt for 1 <= y <= 2."""
        half = 0.5 * (_SWITCH - y)[:, None]
        t = y[:, None] + half * (_GL_NODES[None, :] + 1)
        g = npoly.polyval(t, self.nhat_coef) / (self.p * t * npoly.polyval(t, self.q_coef))
        return (g * half) @ _GL_WEIGHTS

    def log_u(self, s):
        """ln u as a function of s = ln(y - 1); also returns y and I(y)."""
        w = np.exp(s)
        y = 1.0 + w
        out_i = np.empty_like(y)
        big = y >= _SWITCH
        if np.any(big):
            out_i[big] = self.tail(y[big])
        small = ~big
        if np.any(small):
            ys = y[small]
            out_i[small] = (s[small] - np.log(ys)) / self.p + self.rem_at_switch + self._regular(ys)
        return np.log(y) + out_i, y, out_i

    def dlog_u(self, y):
        return y ** (self.m - 1) / npoly.polyval(y, self.q_coef)

    def solve(self, u):
        """Return ``(y, v)`` with ``v = y - u`` for scaled ``u > 0``."""
        u = np.asarray(u, dtype=float)
        target = np.log(u)
        s = np.where(u < 1.0, self.p * (target - self.log_c0), np.log(np.maximum(u, 1.5) - 0.5))
        lo = s.copy()
        hi = s.copy()
        for _ in range(200):
            h_lo = self.log_u(lo)[0] - target
            bad = h_lo > 0
            if not np.any(bad):
                break
            lo = np.where(bad, lo - 2.0 * self.p, lo)
        for _ in range(200):
            h_hi = self.log_u(hi)[0] - target
            bad = h_hi < 0
            if not np.any(bad):
                break
            hi = np.where(bad, hi + 2.0, hi)
        done = np.zeros(u.shape, dtype=bool)
        for _ in range(100):
            h, y, _i = self.log_u(s)
            h = h - target
            lo = np.where(h < 0, s, lo)
            hi = np.where(h > 0, s, hi)
            step = h / self.dlog_u(y)
            new = s - step
            outside = (new <= lo) | (new >= hi)
            new = np.where(outside, 0.5 * (lo + hi), new)
            done = np.abs(new - s) <= 4e-16 * (1.0 + np.abs(s))
            s = new
            if np.all(done):
                break
        else:
            worst = int(np.argmax(~done))
            raise ProfileError(
                f"profile inversion did not converge at u={u.flat[worst]!r}",
                bracket=(float(lo.flat[worst]), float(hi.flat[worst])),
            )
        _, y, tail = self.log_u(s)
        # u' = y e^I is the exact preimage of y; v = y - u' without cancellation
        v = -y * np.expm1(tail)
        return y, v


@dataclass(frozen=True)
class KahlerProfile:
    """Profile of the scalar-flat Kähler family.

    Parameters
    ----------
    m : int
        Complex dimension (real dimension ``n = 2m``).
    p : int
        Integer parameter; ``p = m`` gives the Calabi (Ricci-flat) metric.
    a : float
        Size of the exceptional set; ``a = 0`` is the Euclidean limit.
    force_numeric : bool
        Use the quadrature inversion even when a closed form exists.
    """

    m: int
    p: int
    a: float
    force_numeric: bool = False
    alpha: float = field(init=False)
    beta: float = field(init=False)
    _inverter: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 2 or 2 * self.m > MAX_DIM:
            raise ValueError(f"m={self.m!r} must be an integer with 2 <= m <= {MAX_DIM // 2}")
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise ValueError(f"p={self.p!r} must be a positive integer")
        if not np.isfinite(self.a) or self.a < 0:
            raise ValueError(f"a={self.a!r} must be a finite nonnegative real")
        m, p, a = self.m, self.p, float(self.a)
        object.__setattr__(self, "alpha", (p - m) * a ** (2 * (m - 1)))
        object.__setattr__(self, "beta", (m - 1 - p) * a ** (2 * m))
        inv = None
        if a > 0 and (self.force_numeric or self.closed_form is None):
            inv = _ScaledInverter(m, p)
        object.__setattr__(self, "_inverter", inv)

    @property
    def n(self):
        return 2 * self.m

    @property
    def closed_form(self):
        """Exponent ``k`` with ``y = (a^{2k} + u^k)^{1/k}``, or None."""
        if self.p == self.m:
            return self.m
        if self.p == self.m - 1:
            return self.m - 1
        return None

    def polynomial(self, y):
        """``y^m + alpha y + beta``."""
        y = np.asarray(y, dtype=float)
        return y**self.m + self.alpha * y + self.beta

    def v_of_u(self, u):
        """``v = y(u) - u`` evaluated without cancellation."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("profile requires u > 0")
        a2 = float(self.a) ** 2
        if a2 == 0:
            return np.zeros_like(u)
        uh = u / a2
        k = self.closed_form
        if k is not None and not self.force_numeric:
            return a2 * uh * np.expm1(np.log1p(uh ** (-k)) / k)
        _, vh = self._inverter.solve(uh)
        return a2 * vh

    def y_of_u(self, u):
        """Profile value and derivative ``(y, y')`` from the ODE relation."""
        u = np.asarray(u, dtype=float)
        v = self.v_of_u(u)
        y = u + v
        yp = 1.0 + self._v_prime(u, v)
        return y, yp

    def _v_prime(self, u, v):
        y = u + v
        return v / u + (self.alpha * y + self.beta) / (u * y ** (self.m - 1))

    def ode_residual(self, u):
        """Relative residual ``|P(y) - u y^{m-1} y'| / y^m``."""
        y, yp = self.y_of_u(u)
        return np.abs(self.polynomial(y) - u * y ** (self.m - 1) * yp) / y**self.m

    def v_derivatives(self, u, order=3):
        """``[v, v', v'', v''']`` by propagating jets through the ODE.

        Each pass of ``v' = v/u + (alpha y + beta)/(u y^{m-1})`` fixes one
        more Taylor coefficient, so ``order`` passes give exact derivatives
        of the ODE solution through the computed point.
        """
        u = np.asarray(u, dtype=float)
        v0 = self.v_of_u(u)
        uj = Jet([u, np.ones((1,) + u.shape)] + [np.zeros((1,) * k + u.shape) for k in range(2, order + 1)], 1)
        vj = Jet.constant(v0, 1, order)
        m, al, be = self.m, self.alpha, self.beta
        for _ in range(order):
            yj = uj + vj
            rhs = vj / uj + (al * yj + be) / (uj * yj ** (m - 1))
            vj = Jet([v0] + [rhs.c[k][None] for k in range(order)], 1)
        return [vj.c[k].reshape(u.shape) for k in range(order + 1)]

    def volume_radius_u(self, r):
        """``u`` with ``y(u) = r^2`` (closed form from the ODE's first integral)."""
        r = np.asarray(r, dtype=float)
        y = r * r
        a2 = float(self.a) ** 2
        if np.any(y <= a2):
            raise DomainError("radius must exceed a")
        if a2 == 0:
            return y
        k = self.closed_form
        if k is not None and not self.force_numeric:
            return (y**k - a2**k) ** (1.0 / k)
        inv = self._inverter
        w = y / a2 - 1.0
        lu, _, _ = inv.log_u(np.log(w))
        return a2 * np.exp(lu)


def kahler_profile(m, p, a):
    """Profile with ``alpha = (p-m) a^{2(m-1)}`` and ``beta = (m-1-p) a^{2m}``."""
    return KahlerProfile(int(m), int(p), float(a))


def profile_y_of_u(profile, u):
    """Return ``(y, y')`` at ``u > 0``."""
    return profile.y_of_u(u)


@dataclass(frozen=True)
class KahlerChart(MetricChart):
    """Real form on R^{2m} of ``g_{ij} = phi' delta_ij + phi'' zbar_i z_j``."""

    profile: KahlerProfile
    name = "kahler"
    guard_factor = 1e-3

    @property
    def dim(self):
        return 2 * self.profile.m

    def spec(self):
        pr = self.profile
        return f"kahler:m={pr.m},p={pr.p},a={pr.a!r}"

    def length_scale(self):
        return float(self.profile.a) if self.profile.a > 0 else 1.0

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return super().contains(x) & (r > self.guard_factor * self.profile.a) & (r > 0)

    def complex_structure(self):
        m = self.profile.m
        j = np.zeros((2 * m, 2 * m))
        j[m:, :m] = np.eye(m)
        j[:m, m:] = -np.eye(m)
        return j

    def deviation_jet(self, X):
        pr = self.profile
        m = pr.m
        u = (X * X).sum(-1)
        vd = pr.v_derivatives(u.value, order=X.order)
        v = u.compose(vd + [None] * (4 - len(vd)))
        y = u + v
        dev_i = v / u
        phi2 = (pr.alpha * y + pr.beta) / (u * u * y ** (m - 1))
        xs, ys = X[..., :m], X[..., m:]
        xx = xs[..., :, None] * xs[..., None, :]
        yy = ys[..., :, None] * ys[..., None, :]
        xy = xs[..., :, None] * ys[..., None, :]
        p_blk = dev_i[..., None, None] * np.eye(m) + phi2[..., None, None] * (xx + yy)
        q_blk = phi2[..., None, None] * (xy - xy.swapaxes(-1, -2))
        top = jets.concatenate([p_blk, q_blk], axis=-1)
        bottom = jets.concatenate([-q_blk, p_blk], axis=-1)
        return jets.concatenate([top, bottom], axis=-2)

    def random_points(self, rng, count, r_min, r_max):
        pts = super().random_points(rng, count, r_min, r_max)
        return pts


def flat_chart(n, curvilinear=False):
    n = _check_dim(n)
    return PolarFlatChart(n) if curvilinear else FlatChart(n)


def schwarzschild_chart(n, mu):
    n = _check_dim(n, 4)
    return SchwarzschildChart(n, float(mu))


def kahler_chart(profile):
    return KahlerChart(profile)


def _sphere(radius=1.0):
    if not radius > 0:
        raise ValueError("sphere radius must be positive")
    return RoundSphereChart(float(radius))


# name -> (constructor, {key: (type, required)})
CHART_FAMILIES = {
    "flat": (lambda n: flat_chart(n), {"n": (int, True)}),
    "flatpolar": (lambda n: flat_chart(n, curvilinear=True), {"n": (int, True)}),
    "schwarzschild": (lambda n, mu=1.0: schwarzschild_chart(n, mu), {"n": (int, True), "mu": (float, False)}),
    "kahler": (
        lambda m, p, a=1.0: kahler_chart(kahler_profile(m, p, a)),
        {"m": (int, True), "p": (int, True), "a": (float, False)},
    ),
    "sphere": (_sphere, {"radius": (float, False)}),
}
