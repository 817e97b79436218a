from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lugreloops.integrator import IntegratorConfig, simulate_lugre
from lugreloops.loops import (
    extract_minor_loop,
    limit_star,
    loop_area,
    loop_closed_form,
    trapezoid_area,
    y_circle,
    y_star,
)
from lugreloops.model import ConstantDamping, ModelParams, TabulatedMap
from lugreloops.signal import (
    BimodalInputSpec,
    PeriodicSignal,
    build_bimodal,
    normalize,
    piecewise_linear_signal,
    triangle_signal,
)

from conftest import bimodal_specs, loop_models, ode_limit_cycle, stribeck

EX3 = BimodalInputSpec(0.0, 0.2, 1.0, 1.5)
EX4 = BimodalInputSpec(0.0, 0.5, 1.0, 1.5)


def curve_for(p, spec, **kw):
    return loop_closed_form(p, normalize(build_bimodal(spec)), **kw)


# --- y* -------------------------------------------------------------------------


def test_ystar_at_zero():
    assert y_star(stribeck(), build_bimodal(EX3), 0.0) == 0.0


def test_ystar_ramp():
    u = piecewise_linear_signal([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    p = ModelParams(sigma0=1.0, sigma1=0.0, g=ConstantDamping(2.0))
    expected = 2.0 * (1.0 - math.exp(-0.5))
    assert y_star(p, u, 1.0) == pytest.approx(expected, abs=1e-12)
    assert y_star(p, u, 1.0, method="quad") == pytest.approx(expected, abs=1e-12)


def test_ystar_frozen_on_plateau():
    u = PeriodicSignal([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 1.0, 0.0], allow_flat=True)
    p = ModelParams(sigma0=2.0, sigma1=0.0, g=ConstantDamping(1.0), x0=0.3)
    t = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(y_star(p, u, t), 0.6, rtol=0, atol=1e-15)


def test_ystar_closed_matches_quad():
    u = build_bimodal(EX3)
    p = stribeck(x0=0.4)
    t = np.linspace(0, 3 * u.period, 301)
    a = limit_star(p, u, method="closed")(t)
    b = limit_star(p, u, method="quad")(t)
    assert np.max(np.abs(a - b)) < 1e-12


def test_ystar_independent_of_sigma1_and_f():
    u = build_bimodal(EX3)
    t = np.linspace(0, 9, 97)
    base = y_star(stribeck(sigma1=0.0), u, t)
    other = stribeck(sigma1=10.0).replace(f=TabulatedMap((-1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)))
    assert y_star(other, u, t).tobytes() == base.tobytes()


# --- y° ----------------------------------------------------------------------------


def test_ycircle_closes():
    for spec in (EX3, EX4):
        u = build_bimodal(spec)
        yc = y_circle(stribeck(sigma0=6.0), u)
        assert abs(yc(u.period) - yc(0.0)) < 1e-12


def test_ycircle_triangle_symmetry():
    yc = y_circle(stribeck(), triangle_signal(0.0, 1.0))
    assert yc(0.0) == pytest.approx(-yc(1.0), abs=1e-13)


def test_ycircle_example3_against_simulation():
    """Route (iii): the last of 20 periods at gamma = 1000."""
    u = build_bimodal(EX3)
    p = stribeck()
    traj = simulate_lugre(p, u, 1000.0, 20, IntegratorConfig(samples_per_piece=32))
    c = loop_closed_form(p, normalize(u))
    t, y = traj.period_slice(19)
    assert np.max(np.abs(y - c(t - 19 * u.period))) < 1e-2
    assert abs(y[0] - c.y_breakpoints[0]) < 1e-2
    assert c.y_breakpoints[0] == pytest.approx(-0.70714091, abs=1e-8)


def test_ycircle_quad_matches_ode_oracle():
    u = build_bimodal(EX3)
    p = stribeck()
    _, _, y0 = ode_limit_cycle(p, u.knots, u.values)
    assert y_circle(p, u)(0.0) == pytest.approx(y0, abs=1e-10)


# --- closed form --------------------------------------------------------------------


@pytest.mark.parametrize("spec, sigma0", [(EX3, 1.0), (EX4, 6.0), (EX4, 1.0)])
def test_closed_form_matches_ode_oracle(spec, sigma0):
    p = stribeck(sigma0=sigma0)
    n = normalize(build_bimodal(spec))
    r, y, _ = ode_limit_cycle(p, n.rho, n.values)
    c = loop_closed_form(p, n)
    assert np.max(np.abs(c(r[:-1]) - y[:-1])) < 1e-10


@pytest.mark.parametrize("spec, sigma0", [(EX3, 1.0), (EX4, 6.0)])
def test_closed_form_matches_quadrature(spec, sigma0):
    p = stribeck(sigma0=sigma0)
    u = build_bimodal(spec)
    c = loop_closed_form(p, normalize(u))
    yc = y_circle(p, u)
    assert np.max(np.abs(c.y - yc(c.rho))) < 1e-10


def test_example3_breakpoint_values():
    c = curve_for(stribeck(), EX3)
    expected = (-0.70714, 0.35804, -0.41936, 0.73698, -0.70714)
    np.testing.assert_allclose(c.y_breakpoints, expected, atol=1e-5)


def test_curve_samples_include_breakpoints_and_rho5():
    c = curve_for(stribeck(), EX3)
    for r in (0.0, 1.0, 1.8, 2.6, 3.1, 4.6):
        assert np.any(c.rho == r)
    assert np.all(np.diff(c.rho) > 0)


def test_g0_only_dependence():
    n = normalize(build_bimodal(EX3))
    a = loop_closed_form(stribeck(), n)
    b = loop_closed_form(ModelParams(sigma0=1.0, sigma1=0.0, g=ConstantDamping(2.0)), n)
    assert a.y.tobytes() == b.y.tobytes()


def test_sigma1_and_f_invariance():
    n = normalize(build_bimodal(EX3))
    base = loop_closed_form(stribeck(sigma1=0.0), n).y.tobytes()
    f = TabulatedMap((-2.0, 0.0, 2.0), (-0.7, 0.0, 0.7))
    for s1 in (0.0, 1.0, 10.0):
        for ff in (None, f):
            p = stribeck(sigma1=s1)
            if ff is not None:
                p = p.replace(f=ff)
            assert loop_closed_form(p, n).y.tobytes() == base


def test_small_a_loop_is_thin():
    p = ModelParams(sigma0=1e-6, sigma1=0.0, g=ConstantDamping(2.0))
    c = curve_for(p, EX3)
    assert abs(c.area()) < 1e-3
    # with tiny a the curve is y ~ sigma0 * psi + const
    slope = np.diff(c.y) / np.diff(c.psi)
    np.testing.assert_allclose(slope, 1e-6, rtol=1e-4)


def test_near_degenerate_matches_single_triangle():
    eps = 1e-9
    spec = BimodalInputSpec(0.0, 1.0 - eps, 1.0, 1.5)
    p = stribeck(sigma0=3.0)
    c = curve_for(p, spec)
    tri = loop_closed_form(p, normalize(triangle_signal(0.0, 1.5)))
    r1 = c.breakpoints[1]
    r_tri = np.where(c.rho <= r1, c.rho, c.rho - 2 * eps)
    assert np.max(np.abs(c.y - tri(r_tri))) < 1e-6


def test_multi_piece_input_uses_general_formula():
    """A three-hump input against the ODE oracle."""
    u = piecewise_linear_signal([0, 1, 2, 3, 4, 5, 6], [0.0, 1.0, 0.3, 1.2, 0.5, 0.9, 0.0])
    p = stribeck(sigma0=2.0)
    n = normalize(u)
    assert n.rho5 is None
    c = loop_closed_form(p, n)
    r, y, _ = ode_limit_cycle(p, n.rho, n.values)
    assert np.max(np.abs(c(r[:-1]) - y[:-1])) < 1e-10


# --- loop invariants (property based) ---------------------------------------------


def _check_invariants(c):
    n = c.normalized
    assert abs(c.y[-1] - c.y[0]) < 1e-12
    assert abs(c.psi[-1] - c.psi[0]) < 1e-12
    for k in range(1, len(c.segments)):
        prev = c.segments[k - 1]
        assert c.segments[k].y_start == prev.value(prev.end, c.g0, c.a)
    assert abs(n(n.rho[1]) - n.values[1]) < 1e-12
    if n.rho5 is not None:
        assert abs(n(n.rho5) - n.values[1]) < 1e-12
    assert np.all(np.abs(c.y) < c.g0)
    # each segment moves toward +g0 when rising and -g0 when falling
    d = c.derivative(c.rho[:-1])
    dirs = np.asarray(n.slope(c.rho[:-1]))
    assert np.all(np.sign(d) == dirs)


@settings(max_examples=500)
@given(spec=bimodal_specs(), p=loop_models())
def test_loop_invariants(spec, p):
    c = curve_for(p, spec, samples_per_segment=16)
    _check_invariants(c)


@settings(max_examples=60)
@given(spec=bimodal_specs(), p=loop_models())
def test_closed_form_vs_quadrature_property(spec, p):
    u = build_bimodal(spec)
    c = loop_closed_form(p, normalize(u), samples_per_segment=16)
    yc = y_circle(p, u)
    assert np.max(np.abs(c.y - yc(c.rho))) < 1e-8


# --- minor loop ------------------------------------------------------------------------


def test_minor_loop_example3():
    m = extract_minor_loop(curve_for(stribeck(), EX3))
    assert m.psi_span == (0.2, 1.0)
    assert m.rho_span == (1.0, 2.6)
    (p1, _), (p2, _) = m.arcs
    assert np.all(np.diff(p1) < 0) and np.all(np.diff(p2) > 0)
    assert p1[0] == 1.0 and p2[-1] == 1.0
    assert not m.degenerate
    assert m.closure_gap == pytest.approx(0.0202177, abs=1e-6)


def test_minor_loop_shape_depends_on_sigma0():
    a = extract_minor_loop(curve_for(stribeck(sigma0=6.0), EX4))
    b = extract_minor_loop(curve_for(stribeck(sigma0=1.0), EX4))
    assert a.psi_span == b.psi_span == (0.5, 1.0)
    thick_a = np.ptp(a.y)
    thick_b = np.ptp(b.y)
    assert thick_a > 2 * thick_b
    assert abs(a.area) > 10 * abs(b.area)


def test_minor_loop_degenerate_when_maxima_equal():
    spec = BimodalInputSpec(0.0, 0.2, 1.0, 1.0)
    c = curve_for(stribeck(), spec)
    m = extract_minor_loop(c)
    assert m.degenerate
    assert m.rho_span[1] == c.breakpoints[3]
    assert m.psi[-1] == 1.0


def test_minor_loop_requires_bimodal():
    c = loop_closed_form(stribeck(), normalize(triangle_signal()))
    with pytest.raises(ValueError):
        extract_minor_loop(c)


# --- areas -----------------------------------------------------------------------------


def test_unit_square_area():
    psi = [0.0, 1.0, 1.0, 0.0, 0.0]
    y = [0.0, 0.0, 1.0, 1.0, 0.0]
    assert loop_area(psi, y) == 1.0
    assert trapezoid_area(psi, y) == 1.0
    assert loop_area(psi[::-1], y[::-1]) == -1.0


def test_zero_thickness_area():
    psi = [0.0, 0.5, 1.0, 0.5, 0.0]
    y = [0.0, 1.0, 2.0, 1.0, 0.0]
    assert loop_area(psi, y) == 0.0


def test_open_polyline_rejected():
    with pytest.raises(ValueError):
        loop_area([0.0, 1.0, 1.0], [0.0, 0.0, 1.0])


def test_example3_major_area_dual_oracle():
    c = curve_for(stribeck(), EX3)
    a, b = loop_area(c.psi, c.y), trapezoid_area(c.psi, c.y)
    assert abs(a - b) < 1e-10
    # the loop is traversed clockwise: negative signed area, positive energy
    assert a == pytest.approx(-0.31391, abs=1e-5)
    assert c.energy() == -c.area() > 0


def test_area_rho_range_selects_samples():
    c = curve_for(stribeck(), EX3)
    whole = loop_area(c.psi, c.y, rho=c.rho, rho_range=(0.0, 4.6))
    assert whole == c.area()
    with pytest.raises(ValueError):
        loop_area(c.psi, c.y, rho=c.rho, rho_range=(0.0, 4.55))


@settings(max_examples=50)
@given(spec=bimodal_specs(), p=loop_models())
def test_area_oracles_agree(spec, p):
    c = curve_for(p, spec, samples_per_segment=64)
    assert abs(loop_area(c.psi, c.y) - trapezoid_area(c.psi, c.y)) < 1e-10
    m = extract_minor_loop(c)
    assert abs(m.area - trapezoid_area(m.psi, m.y)) < 1e-10


@given(sigma0=st.floats(0.5, 8.0))
def test_major_loop_energy_positive(sigma0):
    assert curve_for(stribeck(sigma0=sigma0), EX3).energy() > 0
