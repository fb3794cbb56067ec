"""Decay fits, Pohozaev identity, comparison ODE and volume growth."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from alecurv.analysis_lab import (
    constant_field,
    covector_power_field,
    decay_fit,
    kahler_volume,
    ode_closed_form,
    ode_envelope,
    pohozaev_integrands,
    pohozaev_residual,
    radial_power_field,
    sphere_rule,
    volume_expansion_fit,
)
from alecurv.metric_zoo import flat_chart, kahler_chart, kahler_profile, schwarzschild_chart, sphere_area


# decay ----------------------------------------------------------------------------
def test_kahler_curvature_decay():
    chart = kahler_chart(kahler_profile(2, 1, 1.0))
    fit = decay_fit(chart, "rm_norm", 10.0, 2.0, 8, 16, seed=0)
    assert fit.exponent == pytest.approx(4.0, abs=0.1)
    assert np.isfinite(fit.stderr) and fit.flag == "ok"
    assert np.all(np.diff(fit.radii) > 0) and len(fit.radii) == 8


def test_decay_fit_stability():
    chart = schwarzschild_chart(4, 1.0)
    base = decay_fit(chart, "rm_norm", 10.0, 2.0, 8, 16, seed=1).exponent
    more = decay_fit(chart, "rm_norm", 10.0, 2.0, 8, 32, seed=1).exponent
    moved = decay_fit(chart, "rm_norm", 20.0, 2.0, 8, 16, seed=1).exponent
    assert abs(base - more) < 0.02 and abs(base - moved) < 0.02


def test_flat_has_no_decay_signal():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        fit = decay_fit(flat_chart(4), "rm_norm", 1.0, 2.0, 6, 4)
    assert fit.flag == "no decay signal" and np.isnan(fit.exponent)
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)


def test_decay_fit_validation():
    chart = schwarzschild_chart(4, 1.0)
    with pytest.raises(ValueError):
        decay_fit(chart, "rm_norm", 10.0, 2.0, 5, 4)
    with pytest.raises(ValueError):
        decay_fit(chart, "bogus", 10.0, 2.0, 6, 4)
    with pytest.raises(ValueError):
        decay_fit(chart, "rm_norm", 10.0, 1.0, 6, 4)


def test_decay_fit_deterministic():
    chart = kahler_chart(kahler_profile(2, 3, 1.0))
    a = decay_fit(chart, "grad_rm_norm", 10.0, 2.0, 6, 4, seed=9)
    b = decay_fit(chart, "grad_rm_norm", 10.0, 2.0, 6, 4, seed=9)
    assert a.exponent == b.exponent
    assert a.exponent == pytest.approx(5.0, abs=0.1)


# Pohozaev ------------------------------------------------------------------------
def test_sphere_rule_area():
    for n in (2, 3, 4):
        pts, w = sphere_rule(n, 2, 4, 16)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1)
        assert w.sum() == pytest.approx(sphere_area(n - 1), rel=1e-6)


def test_pohozaev_flat_scalar_oracle():
    # flat R^4, T = 1/r: <Lap T, X.grad T> = |grad T|^2 = r^{-4}, boundary terms cancel
    res = pohozaev_residual(flat_chart(4), radial_power_field(-1.0), 1.0, 3.0, quad_order=3, panels=2)
    oracle, _ = integrate.quad(lambda r: sphere_area(3) * r**-4 * r**3, 1.0, 3.0, epsabs=0, epsrel=1e-13)
    assert res.terms["lhs"] == pytest.approx(oracle, rel=1e-6)
    assert res.terms["bulk"] == pytest.approx(oracle, rel=1e-6)
    assert res.terms["gamma_term"] == 0 and res.terms["rm_term"] == 0
    assert res.terms["boundary_out"] == pytest.approx(sphere_area(3) / 2, rel=1e-6)
    assert abs(res.relative_residual) < 1e-6


def test_pohozaev_constant_field():
    res = pohozaev_residual(flat_chart(3), constant_field([1.0, -2.0, 0.5]), 1.0, 2.0, quad_order=2, panels=1)
    for key in ("lhs", "bulk", "gamma_term", "rm_term", "boundary", "residual"):
        assert res.terms[key] == 0.0


def test_commutator_matches_second_derivatives():
    chart = schwarzschild_chart(4, 1.0)
    pts = chart.random_points(np.random.default_rng(4), 6, 1.2, 5.0)
    d = pohozaev_integrands(chart, covector_power_field(0, -2.0), pts)
    anti = d["_nabla2"] - np.swapaxes(d["_nabla2"], 1, 2)
    assert np.max(np.abs(anti - d["_commutator"])) < 1e-13 * np.max(np.abs(d["_commutator"]))
    assert np.max(np.abs(d["_commutator"])) > 1e-3


@pytest.mark.parametrize("field", [radial_power_field(-1.0), covector_power_field(0, -2.0)])
def test_pohozaev_curved_converges(field):
    res = pohozaev_residual(schwarzschild_chart(4, 1.0), field, 2.0, 4.0, quad_order=2, panels=4)
    assert res.within_estimate
    assert abs(res.rate - res.nominal_rate) <= 0.2 * res.nominal_rate
    assert abs(res.terms["gamma_term"]) > 1e-3
    if field.rank:
        assert abs(res.terms["rm_term"]) > 1e-3


# ODE ------------------------------------------------------------------------------
def test_ode_pure_power():
    env = ode_envelope(2.0, 3.0, 0.0, 1.0, 1e3)
    assert np.allclose(env.f_numeric, env.grid**-2.0, rtol=1e-9)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.5, 5.0), b=st.floats(0.5, 5.0), c0=st.floats(0.0, 3.0), f1=st.floats(0.0, 3.0))
def test_ode_matches_closed_form(a, b, c0, f1):
    if abs(a - b) < 1e-3:
        b = a
    env = ode_envelope(a, b, c0, f1, 1e4)
    assert env.max_rel_error < 1e-6
    assert np.all(env.f_numeric >= 0)


def test_ode_closed_form_solves_equation():
    r = np.geomspace(1, 100, 7)
    for a, b in ((2.0, 3.0), (2.0, 2.0)):
        h = 1e-6 * r
        f = lambda x: ode_closed_form(a, b, 1.5, 0.7, x)
        deriv = (f(r + h) - f(r - h)) / (2 * h)
        assert np.allclose(f(r), -(r / a) * deriv + 1.5 * r**-b, rtol=1e-7)
        assert f(np.array([1.0]))[0] == pytest.approx(0.7)


def test_ode_log_coefficient():
    env = ode_envelope(2.0, 2.0, 1.0, 0.0, 1e6)
    assert env.log_ratio == pytest.approx(2.0, rel=1e-8)
    assert ode_envelope(2.0, 2.0, 1.0, 1.0, 1e6).log_coefficient == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(ValueError):
        ode_envelope(2.0, 2.0, 1.0, 1.0, 0.5)


# volume -------------------------------------------------------------------------
@pytest.mark.parametrize("m, p, a", [(2, 1, 1.0), (2, 3, 1.0), (3, 1, 0.7), (3, 4, 1.0)])
def test_volume_first_integral(m, p, a):
    pr = kahler_profile(m, p, a)
    r = np.array([3 * a, 30 * a])
    vol = kahler_volume(pr, r)
    exact = sphere_area(2 * m - 1) * (r ** (2 * m) - a ** (2 * m)) / (2 * m)
    assert np.allclose(vol, exact, rtol=1e-10)


def test_volume_leading_coefficient():
    fit = volume_expansion_fit(kahler_profile(2, 1, 1.0), np.geomspace(10, 100, 8))
    assert fit.c_lead == pytest.approx(np.pi**2 / 2, rel=5e-3)
    assert fit.expected_sub == pytest.approx(-np.pi**2 / 2)


def test_volume_flat_limit():
    fit = volume_expansion_fit(kahler_profile(2, 1, 1e-3), np.geomspace(1, 10, 6))
    assert fit.c_lead == pytest.approx(np.pi**2 / 2, rel=1e-9)
    assert abs(fit.c_sub) < 1e-9
