import numpy as np
import pytest

from gcflab.errors import GCFError, InsufficientDataError
from gcflab.graph2d import GraphState, run_graph2d
from gcflab.interface import (InterfaceCurve, check_envelope, extract_level,
                              fit_speed_band, fit_vanishing_exponent,
                              waiting_time_2d)
from gcflab.params import derive_exponents
from gcflab.radial import RadialState


def radial_power_state(beta=2.0, n=1025, rmax=2.0, coef=1.0, t=0.0):
    r = np.linspace(0, rmax, n)
    return RadialState(r, coef * np.maximum(r - 1.0, 0.0) ** beta, t)


def grid_power_state(beta=2.0, n=161, half=2.0, t=0.0):
    x = np.linspace(-half, half, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    rr = np.sqrt(xx ** 2 + yy ** 2)
    return GraphState(x, x, np.maximum(rr - 1.0, 0.0) ** beta, t)


def circle_curve(radius, t, n_theta=64, epsilon=0.0):
    theta = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    return InterfaceCurve(theta, np.full(n_theta, radius), epsilon, t)


def test_extract_level_radial_exact_boundary():
    p = derive_exponents(1.0)  # beta = 2
    st = radial_power_state()
    c = extract_level(st, 0.0, n_theta=16, params=p)
    # two-sample power inversion is exact on the pure power law
    np.testing.assert_allclose(c.gamma, 1.0, atol=1e-10)
    assert not c.partial


def test_extract_level_radial_positive_level():
    p = derive_exponents(1.0)
    st = radial_power_state()
    c = extract_level(st, 0.04, n_theta=8, params=p)
    # (r-1)^2 = 0.04  =>  r = 1.2
    np.testing.assert_allclose(c.gamma, 1.2, atol=st.dr)


def test_extract_level_2d_circle():
    p = derive_exponents(1.0)
    st = grid_power_state()
    c = extract_level(st, 0.04, n_theta=64, params=p)
    assert not c.partial
    np.testing.assert_allclose(c.gamma, 1.2, atol=2 * st.dx)
    assert c.is_convex()
    c0 = extract_level(st, 0.0, n_theta=64, params=p)
    np.testing.assert_allclose(c0.gamma, 1.0, atol=1.5 * st.dx)


def test_extract_level_ellipse_convex():
    x = np.linspace(-2.4, 2.4, 193)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    re = np.sqrt((xx / 1.4) ** 2 + yy ** 2)
    st = GraphState(x, x, np.maximum(re - 1.0, 0.0) ** 2)
    c = extract_level(st, 0.04, n_theta=90)
    assert not c.partial
    assert c.is_convex(tol=1e-4)
    # periodic: first and last rays close smoothly
    assert abs(c.gamma[0] - c.gamma[-1]) < 0.05


def test_extract_level_partial_flag():
    st = grid_power_state(half=1.1)
    c = extract_level(st, 0.5, n_theta=16)  # level not attained in window
    assert c.partial


def test_extract_level_validation():
    st = radial_power_state()
    with pytest.raises(ValueError):
        extract_level(st, -0.1, params=derive_exponents(1.0))
    with pytest.raises(ValueError):
        extract_level(st, 0.0)  # params required for eps=0 on heights


def test_speed_band_stationary_degenerate():
    curves = [circle_curve(1.0, t) for t in (0.0, 0.1, 0.2)]
    band = fit_speed_band(curves)
    assert band.degenerate
    assert not band.passed
    assert band.c1 == band.c2 == 0.0


def test_speed_band_exponential_shrink():
    k = 0.8
    times = np.linspace(0.1, 0.5, 9)
    curves = [circle_curve(np.exp(-k * t), t) for t in times]
    band = fit_speed_band(curves)
    assert band.passed
    # -d(gamma)/dt = k gamma: bounded by k*gamma(min), k*gamma(max)
    gmin, gmax = np.exp(-k * times[-1]), np.exp(-k * times[0])
    assert band.c1 >= 0.9 * k * gmin
    assert band.c2 <= 1.1 * k * gmax


def test_speed_band_flags_nonmonotone():
    times = np.linspace(0.1, 0.5, 5)
    gam = [1.0, 0.9, 0.95, 0.8, 0.75]  # injected growth
    curves = [circle_curve(g, t) for g, t in zip(gam, times)]
    band = fit_speed_band(curves)
    assert not band.monotone_ok
    assert not band.passed


def test_speed_band_input_validation():
    with pytest.raises(ValueError):
        fit_speed_band([circle_curve(1.0, 0.0), circle_curve(0.9, 0.1)])


@pytest.mark.parametrize("epsilon", [0.0, 0.01])
def test_envelope_recovers_exponent(epsilon):
    k = 1.3
    times = np.linspace(0.1, 0.6, 11)
    curves = [circle_curve(0.7 * np.exp(-k * t), t, epsilon=epsilon)
              for t in times]
    rep = check_envelope(curves, t0=0.2)
    assert rep.passed
    assert rep.k_hat == pytest.approx(k, rel=0.01)
    assert rep.max_rel_residual < 1e-10
    # envelope inequalities hold with the fitted taus
    base = curves[2]
    for c in curves[3:]:
        dt = c.t - base.t
        assert np.all(np.exp(-dt / rep.tau_upper) * base.gamma
                      >= c.gamma - 1e-12)
        assert np.all(c.gamma >= np.exp(-dt / rep.tau_lower) * base.gamma
                      - 1e-12)


def test_envelope_negative_control():
    times = np.linspace(0.1, 0.5, 6)
    curves = [circle_curve(1.0 + 0.2 * t, t) for t in times]  # growing
    rep = check_envelope(curves, t0=0.15)
    assert not rep.monotone_ok
    assert not rep.passed


def test_vanishing_exponent_synthetic_exact():
    p = derive_exponents(1.0)
    st = radial_power_state(beta=2.0)
    rep = fit_vanishing_exponent(st, p, [0.4, 0.2, 0.1])
    for fit in rep.fits:
        assert fit.beta_hat == pytest.approx(2.0, abs=1e-3)
        assert fit.r2 > 0.999999


def test_vanishing_exponent_2d_synthetic():
    p = derive_exponents(0.75)
    st = grid_power_state(beta=2.5, n=193)
    rep = fit_vanishing_exponent(st, p, [0.4, 0.2])
    for fit in rep.fits:
        assert fit.beta_hat == pytest.approx(2.5, rel=0.05)


def test_vanishing_exponent_insufficient_data():
    p = derive_exponents(1.0)
    st = radial_power_state(n=65)
    with pytest.raises(InsufficientDataError):
        fit_vanishing_exponent(st, p, [0.02])


def test_waiting_time_2d(bench2d):
    scen, traj = bench2d
    tstar = waiting_time_2d(traj, (0.0, 0.0), tol=1e-8)
    assert tstar > 0.0
    with pytest.raises(GCFError):
        waiting_time_2d(traj, (1.9, 1.9), tol=1e-8)


def test_curve_points_and_convexity_helpers():
    c = circle_curve(2.0, 0.0, n_theta=32)
    pts = c.points()
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 2.0,
                               rtol=1e-12)
    assert c.is_convex()
    # a dented curve is not convex
    gam = c.gamma.copy()
    gam[5] = 0.4
    dent = InterfaceCurve(c.theta, gam, 0.0, 0.0)
    assert not dent.is_convex()
