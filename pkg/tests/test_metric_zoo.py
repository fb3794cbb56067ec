"""Metric charts and the Kähler profile."""

import numpy as np
import pytest
from scipy import integrate

from alecurv.metric_zoo import (
    CHART_FAMILIES,
    DomainError,
    KahlerProfile,
    RoundSphereChart,
    flat_chart,
    kahler_chart,
    kahler_profile,
    schwarzschild_chart,
    sphere_area,
)


def _u_of_y_oracle(profile, y):
    """ln u - ln y = -int_y^inf (t^{m-1}/P(t) - 1/t) dt by adaptive quadrature."""
    m = profile.m

    def f(t):
        return t ** (m - 1) / profile.polynomial(t) - 1.0 / t

    val, _ = integrate.quad(f, y, np.inf, epsabs=1e-14, epsrel=1e-11, limit=200)
    return y * np.exp(-val)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * np.pi)
    assert sphere_area(2) == pytest.approx(4 * np.pi)
    assert sphere_area(3) == pytest.approx(2 * np.pi**2)


@pytest.mark.parametrize("m, p", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (3, 4)])
def test_profile_coefficients(m, p):
    a = 1.3
    pr = kahler_profile(m, p, a)
    assert pr.alpha == pytest.approx((p - m) * a ** (2 * (m - 1)))
    assert pr.beta == pytest.approx((m - 1 - p) * a ** (2 * m))
    # y = a^2 is a root of the polynomial: the exceptional set
    assert pr.polynomial(a * a) == pytest.approx(0.0, abs=1e-12 * a ** (2 * m))


@pytest.mark.parametrize("m, p, a", [(2, 3, 1.0), (3, 1, 0.5), (3, 4, 2.0), (2, 1, 1.0), (3, 3, 1.0)])
def test_profile_inversion_matches_quadrature_oracle(m, p, a):
    pr = kahler_profile(m, p, a)
    for yh in (1.001, 1.3, 4.0, 50.0, 1e4):
        y = yh * a * a
        u = _u_of_y_oracle(pr, y)
        got, _ = pr.y_of_u(np.array([u]))
        assert got[0] == pytest.approx(y, rel=1e-9)


@pytest.mark.parametrize("m, p", [(2, 2), (2, 1), (3, 3), (3, 2)])
def test_closed_form_matches_numeric(m, p):
    closed = kahler_profile(m, p, 1.0)
    numeric = KahlerProfile(m, p, 1.0, force_numeric=True)
    u = np.geomspace(1e-3, 1e5, 40)
    assert np.allclose(closed.v_of_u(u), numeric.v_of_u(u), rtol=1e-11, atol=0)


@pytest.mark.parametrize("m, p", [(2, 1), (2, 3), (3, 1), (3, 4)])
def test_profile_ode_residual(m, p):
    pr = kahler_profile(m, p, 1.0)
    assert np.max(pr.ode_residual(np.geomspace(1e-3, 1e6, 50))) < 1e-12


def test_profile_derivatives_against_differences():
    pr = kahler_profile(2, 3, 1.0)
    u, h = 2.0, 1e-3
    d = pr.v_derivatives(np.array([u]))
    vals = pr.v_of_u(np.array([u - 2 * h, u - h, u, u + h, u + 2 * h]))
    first = (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h)
    second = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)
    assert d[1][0] == pytest.approx(first, rel=1e-9)
    assert d[2][0] == pytest.approx(second, rel=1e-6)


def test_flat_limit():
    pr = kahler_profile(2, 1, 0.0)
    assert np.all(pr.v_of_u(np.array([0.5, 3.0])) == 0)


def test_profile_validation():
    with pytest.raises(ValueError):
        kahler_profile(1, 1, 1.0)
    with pytest.raises(ValueError):
        kahler_profile(2, 0, 1.0)
    with pytest.raises(ValueError):
        kahler_profile(2, 1, -1.0)
    with pytest.raises(DomainError):
        kahler_profile(2, 1, 1.0).v_of_u(np.array([0.0]))


def test_kahler_metric_is_hermitian():
    chart = kahler_chart(kahler_profile(2, 3, 1.0))
    rng = np.random.default_rng(3)
    x = chart.random_points(rng, 10, 2.0, 30.0)
    g = chart.metric(x)
    j = chart.complex_structure()
    assert np.allclose(np.einsum("ai,bj,nab->nij", j, j, g), g, atol=1e-13)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_schwarzschild_conformal_factor():
    chart = schwarzschild_chart(4, 2.0)
    x = np.array([[1.5, 0.0, 0.0, 0.0]])
    factor = (1 + 2.0 / 1.5**2) ** 2
    assert np.allclose(chart.metric(x)[0], factor * np.eye(4))


def test_domain_errors():
    with pytest.raises(DomainError):
        schwarzschild_chart(4, 1.0).metric(np.zeros((1, 4)))
    with pytest.raises(DomainError):
        RoundSphereChart().metric(np.array([[0.0, 1.0]]))
    with pytest.raises(DomainError):
        kahler_chart(kahler_profile(2, 1, 1.0)).metric(np.full((1, 4), 1e-5))
    with pytest.raises(ValueError):
        flat_chart(4).metric(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        schwarzschild_chart(4, -1.0)


def test_jets_shapes():
    chart = schwarzschild_chart(5, 1.0)
    g, dg, d2g, d3g = chart.jets(np.ones((3, 5)))
    assert g.shape == (3, 5, 5) and d3g.shape == (3,) + (5,) * 5


@pytest.mark.parametrize(
    "family, kwargs",
    [("flat", {"n": 3}), ("flatpolar", {"n": 3}), ("schwarzschild", {"n": 4, "mu": 2.0}),
     ("kahler", {"m": 2, "p": 3, "a": 0.5}), ("sphere", {"radius": 2.0})],
)
def test_spec_roundtrip(family, kwargs):
    chart = CHART_FAMILIES[family][0](**kwargs)
    name, rest = chart.spec().split(":")
    params = dict(kv.split("=") for kv in rest.split(","))
    keys = CHART_FAMILIES[family][1]
    rebuilt = CHART_FAMILIES[name][0](**{k: keys[k][0](v) for k, v in params.items()})
    assert rebuilt.spec() == chart.spec()
