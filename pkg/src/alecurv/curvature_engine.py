"""Christoffel symbols, curvature and its covariant derivatives from metric jets.

Two derivative backends feed the same assembly:

* ``"jet"`` evaluates the chart formula in truncated Taylor arithmetic, giving
  exact partials of the metric up to third order;
* ``"fd"`` applies product central differences to the chart's deviation and
  Richardson-extrapolates over three step sizes.

Sign conventions: ``R_ijkl = g(R(e_i, e_j) e_l, e_k)`` so that ``R_ijij`` is
the sectional curvature (positive on the round sphere), ``Rc_jl`` is the
trace over slots 1 and 3, and the derivative index of ``grad_rm`` is the
last slot.  Tensor outputs of :func:`curvature_batch` are expressed in the
Cholesky frame ``E = L^{-T}`` with ``g = L L^T``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .tensor_core import DenseTensor, kulkarni_nomizu_array, weyl_decompose_array

__all__ = [
    "TOL_ALGEBRA",
    "TOL_FIRST",
    "TOL_HIGHER",
    "TOL_BACKEND",
    "BackendDisagreement",
    "CurvatureBundle",
    "derivative_backend_eval",
    "fd_jets",
    "backend_cross_check",
    "christoffel",
    "curvature_batch",
    "curvature_bundle",
    "curvature_derivatives",
    "bianchi_residuals",
]

TOL_ALGEBRA = 1e-12
TOL_FIRST = 1e-10
TOL_HIGHER = 1e-8
TOL_BACKEND = 1e-6

FD_BASE_STEP = 1e-3
# third partials lose (L/h)^3 digits to rounding; a wider base step keeps the
# extrapolated estimate inside the cross-check gate
FD_STEP_BY_ORDER = {1: 1e-3, 2: 1e-3, 3: 1e-2}


class BackendDisagreement(RuntimeError):
    """The jet and finite-difference backends disagree beyond tolerance."""


# finite differences -------------------------------------------------------------
def _multisets(n, k):
    return list(itertools.combinations_with_replacement(range(n), k))


def _stencil(n, k):
    """Offsets (in units of h/2) and weights for every index multiset."""
    sets = _multisets(n, k)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
    offsets = np.zeros((len(sets), len(signs), n))
    weights = np.prod(signs, axis=1)
    for a, idx in enumerate(sets):
        for b, sg in enumerate(signs):
            for axis, s in zip(idx, sg):
                offsets[a, b, axis] += s
    return sets, offsets, weights


def _fd_level(chart, x, h, k):
    """Central product-difference estimate of k-th partials of D at step h."""
    n = x.shape[-1]
    sets, offsets, weights = _stencil(n, k)
    pts = x[:, None, None, :] + 0.5 * h[:, None, None, None] * offsets[None]
    dev = chart.deviation(pts)  # (B, M, S, n, n)
    est = np.einsum("bmsij,s->bmij", dev, weights) / h[:, None, None, None] ** k
    return sets, est


def _fd_partials(chart, x, k, base_step=None):
    base = FD_STEP_BY_ORDER[k] if base_step is None else base_step
    scale = chart.length_scale()
    h0 = base * (scale + np.linalg.norm(x, axis=-1))
    levels = []
    for level in range(3):
        sets, est = _fd_level(chart, x, h0 / 2**level, k)
        levels.append(est)
    r1a = (4 * levels[1] - levels[0]) / 3
    r1b = (4 * levels[2] - levels[1]) / 3
    best = (16 * r1b - r1a) / 15
    n = x.shape[-1]
    full = np.empty((x.shape[0], n, n) + (n,) * k)
    for a, idx in enumerate(sets):
        for perm in set(itertools.permutations(idx)):
            full[(slice(None), slice(None), slice(None)) + perm] = best[:, a]
    return full


def fd_jets(chart, x, order=3, base_step=None):
    """Metric jets from Richardson-extrapolated central differences."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, chart.dim)
    out = [chart.metric(pts)]
    for k in range(1, order + 1):
        out.append(_fd_partials(chart, pts, k, base_step))
    lead = x.shape[:-1]
    return [arr.reshape(lead + arr.shape[1:]) for arr in out]


def _worst_component(diff, scale):
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    return tuple(int(i) for i in idx), float(diff[idx] / scale)


def backend_cross_check(chart, x, order=3, tol=TOL_BACKEND, jets=None):
    """Compare the jet backend against finite differences.

    The error for derivative order ``k`` is measured relative to
    ``max(max|jet_k|, max|D| / L^k)`` where ``L = scale + |x|`` is the local
    length scale, so orders whose exact value vanishes are judged against
    the size of the deviation they are derived from.

    Returns the per-order relative errors; raises
    :class:`BackendDisagreement` naming the worst component on failure.
    """
    x = np.asarray(x, dtype=float).reshape(-1, chart.dim)
    exact = chart.jets(x, order) if jets is None else jets
    approx = fd_jets(chart, x, order)
    length = chart.length_scale() + np.linalg.norm(x, axis=-1)
    dev_scale = np.max(np.abs(exact[0] - np.eye(chart.dim)), axis=(-1, -2))
    errors = {}
    for k in range(1, order + 1):
        diff = np.abs(exact[k] - approx[k])
        axes = tuple(range(1, diff.ndim))
        scale = np.maximum(np.max(np.abs(exact[k]), axis=axes), dev_scale / length**k)
        scale = np.maximum(scale, 1e-300)
        rel = np.max(diff, axis=axes) / scale
        worst = int(np.argmax(rel))
        errors[k] = float(rel[worst])
        if rel[worst] > tol:
            comp, _ = _worst_component(diff[worst], scale[worst])
            names = "g_{%d%d}" % comp[:2] + "".join(f",{a}" for a in comp[2:])
            raise BackendDisagreement(
                f"{chart.spec()}: order-{k} partial {names} at x={x[worst].tolist()} "
                f"differs by {rel[worst]:.3e} (relative) between backends"
            )
    return errors


def derivative_backend_eval(chart, x, order=3, backend="jet", cross_check=False):
    """Metric and partials to ``order`` from the chosen backend."""
    if not 0 <= order <= 3:
        raise ValueError("order must be 0..3")
    if backend == "jet":
        out = chart.jets(x, order)
        if cross_check and order > 0:
            backend_cross_check(chart, x, order, jets=out)
        return out
    if backend == "fd":
        return fd_jets(chart, x, order)
    raise ValueError(f"unknown backend {backend!r}")


# assembly --------------------------------------------------------------------
def christoffel(g, dg):
    """First-kind symbols ``G_kij`` and ``Gamma^k_ij`` (batched)."""
    gam1 = 0.5 * (
        np.einsum("...jki->...kij", dg) + np.einsum("...ikj->...kij", dg) - np.einsum("...ijk->...kij", dg)
    )
    ginv = np.linalg.inv(g)
    return gam1, np.einsum("...kl,...lij->...kij", ginv, gam1)


def _coordinate_curvature(g, dg, d2g, d3g=None):
    ginv = np.linalg.inv(g)
    gam1, gam = christoffel(g, dg)
    # d_a G_kij
    dgam1 = 0.5 * (
        np.einsum("...jkia->...kija", d2g) + np.einsum("...ikja->...kija", d2g) - np.einsum("...ijka->...kija", d2g)
    )
    rm = (
        np.einsum("...kjli->...ijkl", dgam1)
        - np.einsum("...kilj->...ijkl", dgam1)
        - np.einsum("...aik,...ajl->...ijkl", gam1, gam)
        + np.einsum("...ajk,...ail->...ijkl", gam1, gam)
    )
    # d_m Gamma^a_jl = g^{ab} (d_m G_bjl - d_m g_bd Gamma^d_jl)
    dgam = np.einsum("...ab,...bjlm->...ajlm", ginv, dgam1 - np.einsum("...bdm,...djl->...bjlm", dg, gam))
    out = {"ginv": ginv, "gam1": gam1, "gamma": gam, "dgamma": dgam, "rm": rm}
    # rounding floor: curvature is a sum of terms of this size
    out["rm_floor"] = _norms(d2g, d2g.ndim - 4) + _norms(gam1, gam1.ndim - 3) * _norms(gam, gam.ndim - 3)
    if d3g is None:
        return out
    d2gam1 = 0.5 * (
        np.einsum("...jkiab->...kijab", d3g) + np.einsum("...ikjab->...kijab", d3g) - np.einsum("...ijkab->...kijab", d3g)
    )
    out["grad_floor"] = _norms(d3g, d3g.ndim - 5) + _norms(dgam1, dgam1.ndim - 4) * _norms(gam, gam.ndim - 3) + out[
        "rm_floor"
    ] * _norms(gam, gam.ndim - 3)
    drm = (
        np.einsum("...kjlim->...ijklm", d2gam1)
        - np.einsum("...kiljm->...ijklm", d2gam1)
        - np.einsum("...aikm,...ajl->...ijklm", dgam1, gam)
        - np.einsum("...aik,...ajlm->...ijklm", gam1, dgam)
        + np.einsum("...ajkm,...ail->...ijklm", dgam1, gam)
        + np.einsum("...ajk,...ailm->...ijklm", gam1, dgam)
    )
    # covariant derivative, derivative slot last
    grad = (
        drm
        - np.einsum("...pmi,...pjkl->...ijklm", gam, rm)
        - np.einsum("...pmj,...ipkl->...ijklm", gam, rm)
        - np.einsum("...pmk,...ijpl->...ijklm", gam, rm)
        - np.einsum("...pml,...ijkp->...ijklm", gam, rm)
    )
    out["grad_rm"] = grad
    return out


def _to_frame(t, e):
    order = t.ndim - e.ndim + 2
    letters = "abcdefgh"[:order]
    src = "pqrstuvw"[:order]
    spec = "..." + src + "," + ",".join(f"...{s}{l}" for s, l in zip(src, letters)) + "->..." + letters
    return np.einsum(spec, t, *([e] * order), optimize=True)


def cholesky_frame(g):
    """``E = L^{-T}`` with ``g = L L^T``, so ``E^T g E = I``."""
    low = np.linalg.cholesky(g)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return np.swapaxes(np.linalg.solve(low, eye), -1, -2)


def curvature_batch(chart, x, derivatives=True, backend="jet", cross_check=False):
    """Curvature quantities at a batch of points ``x`` of shape ``(B, n)``.

    Returns a dict of arrays; tensors other than ``gamma`` are frame
    components.  Keys: ``point, g, frame, gamma, rm, rc, r_scalar, a_schouten,
    w`` and, with ``derivatives``, ``grad_rm, grad_rc, div_rm``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    order = 3 if derivatives else 2
    jet = derivative_backend_eval(chart, x, order, backend=backend, cross_check=cross_check)
    coord = _coordinate_curvature(*jet)
    g = jet[0]
    frame = cholesky_frame(g)
    rm = _to_frame(coord["rm"], frame)
    rc = np.einsum("...ijil->...jl", rm)
    r = np.einsum("...jj->...", rc)
    eye = np.broadcast_to(np.eye(chart.dim), rc.shape)
    w, a = weyl_decompose_array(rm, eye, rc, r)
    out = {
        "point": x,
        "g": g,
        "frame": frame,
        "gamma": coord["gamma"],
        "rm": rm,
        "rc": rc,
        "r_scalar": r,
        "a_schouten": a,
        "w": w,
        "rm_floor": coord["rm_floor"],
    }
    if derivatives:
        out["grad_floor"] = coord["grad_floor"]
        grad_rm = _to_frame(coord["grad_rm"], frame)
        out["grad_rm"] = grad_rm
        out["grad_rc"] = np.einsum("...ijilm->...jlm", grad_rm)
        out["div_rm"] = np.einsum("...ijkli->...jkl", grad_rm)
        # floor for relative derivative residuals where grad_rm vanishes
        length = chart.length_scale() + np.linalg.norm(x, axis=-1)
        out["deriv_scale"] = _norms(rm, 1) / length
    return out


def _norms(t, nlead):
    return np.sqrt(np.sum(t.reshape(t.shape[:nlead] + (-1,)) ** 2, axis=-1))


def bianchi_residuals(batch):
    """Relative residuals of the curvature identities for a batch dict.

    ``contracted``: ``div_rm_jkl - (grad_rc_jlk - grad_rc_jkl)``; ``second``:
    cyclic sum of ``grad_rm`` over its last three slots; both relative to
    ``|grad_rm|``.  ``first``: first Bianchi on ``rm`` relative to ``|rm|``.
    """
    rm = batch["rm"]
    nlead = rm.ndim - 4
    rm_scale = np.maximum(_norms(rm, nlead), 1e-300)
    first = rm + np.einsum("...ijkl->...iklj", rm) + np.einsum("...ijkl->...iljk", rm)
    out = {"first": _norms(first, nlead) / rm_scale}
    if "grad_rm" in batch:
        grad = batch["grad_rm"]
        scale = np.maximum(_norms(grad, nlead), batch.get("deriv_scale", 0.0))
        scale = np.maximum(scale, 1e-300)
        grad_rc = batch["grad_rc"]
        contracted = batch["div_rm"] - (
            np.einsum("...jlk->...jkl", grad_rc) - grad_rc
        )
        second = (
            grad
            + np.einsum("...ijklm->...ijlmk", grad)
            + np.einsum("...ijklm->...ijmkl", grad)
        )
        div = batch["div_rm"]
        antisym = div + np.swapaxes(div, -1, -2)
        out["contracted"] = _norms(contracted, nlead) / scale
        out["second"] = _norms(second, nlead) / scale
        out["div_antisym"] = _norms(antisym, nlead) / scale
    return out


@dataclass(frozen=True)
class CurvatureBundle:
    """Pointwise geometry at a single chart point (frame components)."""

    point: np.ndarray
    frame: np.ndarray
    gamma: np.ndarray
    rm: DenseTensor
    rc: DenseTensor
    r_scalar: float
    a_schouten: DenseTensor
    w: DenseTensor
    grad_rm: DenseTensor
    grad_rc: DenseTensor
    div_rm: DenseTensor

    def norms(self):
        return {
            "rm": self.rm.norm(),
            "rc": self.rc.norm(),
            "w": self.w.norm(),
            "a_odot_g": float(np.linalg.norm(kulkarni_nomizu_array(self.a_schouten.array, np.eye(self.rm.dim)))),
            "grad_rm": self.grad_rm.norm(),
            "grad_rc": self.grad_rc.norm(),
            "div_rm": self.div_rm.norm(),
        }


def curvature_bundle(chart, x, backend="jet", cross_check=True):
    """Full curvature bundle at one point.

    With ``cross_check`` (the default) the jet backend is compared against
    finite differences first and :class:`BackendDisagreement` propagates.
    """
    x = np.asarray(x, dtype=float).reshape(1, chart.dim)
    b = curvature_batch(chart, x, derivatives=True, backend=backend, cross_check=cross_check and backend == "jet")
    t = lambda key: DenseTensor.from_array(b[key][0])  # noqa: E731
    return CurvatureBundle(
        point=x[0],
        frame=b["frame"][0],
        gamma=b["gamma"][0],
        rm=t("rm"),
        rc=t("rc"),
        r_scalar=float(b["r_scalar"][0]),
        a_schouten=t("a_schouten"),
        w=t("w"),
        grad_rm=t("grad_rm"),
        grad_rc=t("grad_rc"),
        div_rm=t("div_rm"),
    )


def curvature_derivatives(chart, x, backend="jet", cross_check=False):
    """``(grad_rm, grad_rc, div_rm)`` frame arrays at one point."""
    x = np.asarray(x, dtype=float).reshape(1, chart.dim)
    b = curvature_batch(chart, x, derivatives=True, backend=backend, cross_check=cross_check)
    return b["grad_rm"][0], b["grad_rc"][0], b["div_rm"][0]
