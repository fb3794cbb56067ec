"""Curvature from metric jets, checked against closed-form geometries."""

from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alecurv import jets as jt
from alecurv.curvature_engine import (
    BackendDisagreement,
    backend_cross_check,
    bianchi_residuals,
    curvature_batch,
    curvature_bundle,
    derivative_backend_eval,
    fd_jets,
)
from alecurv.metric_zoo import (
    MetricChart,
    RoundSphereChart,
    flat_chart,
    kahler_chart,
    kahler_profile,
    schwarzschild_chart,
)


@dataclass(frozen=True)
class PoincareBall(MetricChart):
    """Hyperbolic metric (2 / (1 - |x|^2))^2 dx^2: sectional curvature -1."""

    dim: int
    name = "poincare"

    def contains(self, x):
        return super().contains(x) & (np.linalg.norm(x, axis=-1) < 0.9)

    def deviation_jet(self, X):
        s2 = (X * X).sum(-1)
        factor = 4.0 * jt.power(1.0 - s2, -2.0) - 1.0
        return factor[..., None, None] * np.eye(self.dim)


@dataclass(frozen=True)
class Revolution(MetricChart):
    """dr^2 + f(r)^2 dtheta^2 with f = r + r^3, Gauss curvature -f''/f."""

    dim = 2
    name = "revolution"

    def contains(self, x):
        return super().contains(x) & (x[..., 0] > 0.1)

    def deviation_jet(self, X):
        r = X[..., 0]
        f = r + r * r * r
        return (f * f - 1.0)[..., None, None] * np.diag([0.0, 1.0])


def _points(chart, count=6, seed=0, lo=0.2, hi=0.7):
    rng = np.random.default_rng(seed)
    return chart.random_points(rng, count, lo, hi)


def test_sphere_constant_curvature():
    chart = RoundSphereChart(2.0)
    b = curvature_batch(chart, chart.random_points(np.random.default_rng(0), 5))
    assert np.allclose(b["r_scalar"], 2 / 4.0, rtol=1e-12)
    assert np.max(np.abs(b["grad_rm"])) < 1e-12


@pytest.mark.parametrize("n", [3, 4])
def test_hyperbolic_space_form(n):
    chart = PoincareBall(n)
    b = curvature_batch(chart, _points(chart))
    frame_space_form = -(np.einsum("ik,jl->ijkl", np.eye(n), np.eye(n)) - np.einsum("il,jk->ijkl", np.eye(n), np.eye(n)))
    assert np.allclose(b["rm"], frame_space_form, atol=1e-11)
    assert np.allclose(b["r_scalar"], -n * (n - 1), rtol=1e-12)
    assert np.max(np.abs(b["w"])) < 1e-11
    assert np.max(np.abs(b["grad_rm"])) < 1e-9


def test_surface_of_revolution():
    chart = Revolution()
    x = np.array([[0.5, 0.3], [1.2, -2.0]])
    b = curvature_batch(chart, x)
    r = x[:, 0]
    k = -6 * r / (r + r**3)
    assert np.allclose(b["rm"][:, 0, 1, 0, 1], k, rtol=1e-12)
    assert np.allclose(b["r_scalar"], 2 * k, rtol=1e-12)
    # d K / dr along the orthonormal radial direction
    dk = -6 / (1 + r**2) ** 2 * 2 * r * (-1)
    assert np.allclose(b["grad_rm"][:, 0, 1, 0, 1, 0], dk, rtol=1e-10)


def test_flat_charts_vanish():
    for chart, pts in ((flat_chart(4), np.random.default_rng(1).standard_normal((5, 4))),
                       (flat_chart(3, curvilinear=True), flat_chart(3, True).random_points(np.random.default_rng(2), 5, 0.5, 3))):
        b = curvature_batch(chart, pts)
        assert np.max(np.abs(b["rm"])) < 1e-12
        assert np.max(np.abs(b["grad_rm"])) < 1e-12


@pytest.mark.parametrize("n", [4, 5, 6])
def test_schwarzschild_scalar_flat_and_harmonic(n):
    chart = schwarzschild_chart(n, 1.0)
    b = curvature_batch(chart, _points(chart, 8, n, 1.2, 10.0))
    rm = np.linalg.norm(b["rm"].reshape(8, -1), axis=1)
    assert np.max(np.abs(b["r_scalar"]) / rm) < 1e-12
    assert np.max(np.abs(b["div_rm"])) < 1e-10 * np.max(np.abs(b["grad_rm"]))


@pytest.mark.parametrize("m, p", [(2, 1), (2, 3), (3, 1), (3, 4), (2, 2)])
def test_kahler_scalar_flat(m, p):
    chart = kahler_chart(kahler_profile(m, p, 1.0))
    b = curvature_batch(chart, _points(chart, 6, m + p, 2.0, 50.0), derivatives=False)
    rm = np.linalg.norm(b["rm"].reshape(6, -1), axis=1)
    assert np.max(np.abs(b["r_scalar"]) / rm) < 1e-10


def test_calabi_ricci_flat():
    chart = kahler_chart(kahler_profile(2, 2, 1.0))
    b = curvature_batch(chart, _points(chart, 6, 0, 1.5, 20.0), derivatives=False)
    assert np.max(np.abs(b["rc"])) < 1e-10 * np.max(np.abs(b["rm"]))


@pytest.mark.parametrize("spec", ["schwarzschild", "kahler", "sphere", "poincare"])
def test_bianchi_identities(spec):
    chart = {
        "schwarzschild": schwarzschild_chart(4, 1.0),
        "kahler": kahler_chart(kahler_profile(2, 3, 1.0)),
        "sphere": RoundSphereChart(),
        "poincare": PoincareBall(4),
    }[spec]
    pts = chart.random_points(np.random.default_rng(5), 6) if spec == "sphere" else _points(
        chart, 6, 5, *((0.2, 0.7) if spec == "poincare" else (2.0, 10.0)))
    res = bianchi_residuals(curvature_batch(chart, pts))
    for key in ("first", "contracted", "second", "div_antisym"):
        assert np.max(res[key]) < 1e-9, key


@pytest.mark.parametrize("chart", [schwarzschild_chart(4, 1.0), kahler_chart(kahler_profile(2, 1, 1.0)), PoincareBall(3)])
def test_backends_agree(chart):
    lo, hi = (0.2, 0.7) if isinstance(chart, PoincareBall) else (2.0, 20.0)
    errs = backend_cross_check(chart, _points(chart, 4, 9, lo, hi), 3)
    assert errs[1] < 1e-9 and errs[2] < 1e-7 and errs[3] < 1e-6


def test_backend_disagreement_names_component():
    chart = schwarzschild_chart(4, 1.0)
    x = np.array([[3.0, 0.5, 0.2, 0.1]])
    good = chart.jets(x)
    bad = [good[0], good[1].copy(), good[2], good[3]]
    bad[1][0, 1, 1, 2] += 1e-3
    with pytest.raises(BackendDisagreement, match=r"g_\{11\},2"):
        backend_cross_check(chart, x, 3, jets=bad)


def test_fd_backend_curvature_close():
    chart = schwarzschild_chart(4, 1.0)
    x = np.array([[2.0, 0.3, -0.4, 0.5]])
    exact = curvature_batch(chart, x)
    approx = curvature_batch(chart, x, backend="fd")
    assert np.allclose(approx["rm"], exact["rm"], atol=1e-8 * np.max(np.abs(exact["rm"])))
    with pytest.raises(ValueError):
        derivative_backend_eval(chart, x, 3, backend="symbolic")
    assert len(fd_jets(chart, x, 2)) == 3


def test_bundle_types():
    chart = schwarzschild_chart(4, 1.0)
    bundle = curvature_bundle(chart, np.array([2.0, 0.1, 0.2, 0.3]))
    norms = bundle.norms()
    assert norms["rm"] > 0 and norms["div_rm"] < 1e-10 * norms["grad_rm"]
    assert bundle.rm.order == 4 and bundle.grad_rm.order == 5


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_norms_invariant_under_coordinate_rotation(seed):
    # rotating the chart by Q leaves frame norms unchanged at corresponding points
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    chart = kahler_chart(kahler_profile(2, 3, 1.0))

    @dataclass(frozen=True)
    class Rotated(MetricChart):
        dim = 4
        name = "rotated"

        def deviation_jet(self, X):
            y = jt.stack([(X * q[i]).sum(-1) for i in range(4)], axis=-1)
            d = chart.deviation_jet(y)
            return jt.stack([jt.stack([sum((d[..., a, b] * (q[a, i] * q[b, j]) for a in range(4) for b in range(4)))
                                       for j in range(4)], axis=-1) for i in range(4)], axis=-2)

    x = np.array([[0.5, 2.0, -1.0, 1.5]])
    y = x @ q.T
    b1 = curvature_batch(chart, y, derivatives=False)
    b2 = curvature_batch(Rotated(), x, derivatives=False)
    assert np.linalg.norm(b2["rm"]) == pytest.approx(np.linalg.norm(b1["rm"]), rel=1e-10)
