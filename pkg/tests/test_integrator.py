from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lugreloops.integrator import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    simulate_example1,
    simulate_lugre,
    steady_state_periods,
)
from lugreloops.loops import y_circle
from lugreloops.model import ConstantDamping, ModelParams, TabulatedMap
from lugreloops.signal import (
    BimodalInputSpec,
    CallableProfile,
    PeriodicSignal,
    build_bimodal,
    piecewise_linear_signal,
    triangle_signal,
)

from conftest import bimodal_specs, scipy_lugre, stribeck

EX3 = BimodalInputSpec(0.0, 0.2, 1.0, 1.5)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=-1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="euler")
    cfg = IntegratorConfig().halved()
    assert (cfg.rel_tol, cfg.abs_tol) == (5e-9, 5e-11)


def test_gamma_must_be_positive():
    with pytest.raises(ValueError, match="gamma must be positive"):
        simulate_lugre(stribeck(), triangle_signal(), 0.0, 1)


def test_corners_are_sample_times():
    u = build_bimodal(EX3)
    traj = simulate_lugre(stribeck(), u, 10.0, 3, IntegratorConfig(samples_per_piece=8))
    assert np.all(np.diff(traj.t) > 0)
    corners = np.concatenate([u.knots[:-1] + m * u.period for m in range(3)] + [[3 * u.period]])
    for c in corners:
        assert np.sum(traj.t == c) == 1
    # x(0) = 0 but the damping term sees zdot(0) = udot(0) = 1
    assert traj.t[0] == 0.0 and traj.x[0] == 0.0
    assert traj.y[0] == pytest.approx(1.0 / 10.0, abs=1e-15)


def _interior_match(traj, t_ref, y_ref, per_piece):
    """Pair oracle samples strictly inside pieces with the package's samples."""
    idx = np.arange(t_ref.size) % per_piece
    inner = (idx != 0) & (idx != per_piece - 1)
    j = np.searchsorted(traj.t, t_ref[inner])
    j = np.clip(j, 1, traj.t.size - 1)
    j = np.where(np.abs(traj.t[j - 1] - t_ref[inner]) < np.abs(traj.t[j] - t_ref[inner]), j - 1, j)
    assert np.max(np.abs(traj.t[j] - t_ref[inner])) < 1e-12
    return traj.y[j], y_ref[inner]


@pytest.mark.parametrize("gamma", [2.0, 100.0])
def test_matches_scipy_oracle(gamma):
    u = piecewise_linear_signal([0.0, 1.0, 3.0, 4.0], [0.0, 2.0, -1.0, 0.0])
    p = stribeck(sigma0=3.0, sigma1=0.5, x0=0.2)
    p = p.replace(f=TabulatedMap((-1.0, 0.0, 1.0), (-0.4, 0.0, 0.4)))
    traj = simulate_lugre(p, u, gamma, 2, IntegratorConfig(samples_per_piece=4))
    t_ref, y_ref = scipy_lugre(p, u.knots, u.values, gamma, 2, t_eval_per_piece=5)
    a, b = _interior_match(traj, t_ref, y_ref, 5)
    assert a.size == 2 * 3 * 3
    assert np.max(np.abs(a - b)) < 1e-7


def test_matches_scipy_oracle_bimodal():
    u = build_bimodal(EX3)
    p = stribeck(sigma0=6.0)
    traj = simulate_lugre(p, u, 10.0, 3, IntegratorConfig(samples_per_piece=8))
    t_ref, y_ref = scipy_lugre(p, u.knots, u.values, 10.0, 3, t_eval_per_piece=9)
    a, b = _interior_match(traj, t_ref, y_ref, 9)
    assert np.max(np.abs(a - b)) < 1e-7


def test_equilibrium_on_long_rising_piece():
    u = piecewise_linear_signal([0.0, 40.0, 41.0], [0.0, 40.0, 0.0])
    p = ModelParams(sigma0=1.0, sigma1=0.0, g=ConstantDamping(2.0))
    traj = simulate_lugre(p, u, 1.0, 1)
    z_at_40 = traj.x[traj.t == 40.0][0]
    assert z_at_40 == pytest.approx(2.0 * (1 - math.exp(-20.0)), abs=1e-9)


def test_rk4_scheme_agrees_with_adaptive():
    u = build_bimodal(EX3)
    p = stribeck()
    a = simulate_lugre(p, u, 10.0, 2, IntegratorConfig(samples_per_piece=16))
    b = simulate_lugre(p, u, 10.0, 2, IntegratorConfig(samples_per_piece=16, scheme="rk4", rk4_substeps=32))
    np.testing.assert_array_equal(a.t, b.t)
    assert np.max(np.abs(a.y - b.y)) < 1e-7


def test_non_finite_input_derivative_raises():
    bad = CallableProfile(lambda s: s, lambda s: np.full_like(np.asarray(s, dtype=float), np.nan))
    u = PeriodicSignal([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], profiles=[bad, bad])
    with pytest.raises(IntegrationError):
        simulate_lugre(stribeck(), u, 1.0, 1)


def test_tolerance_halving_self_consistency():
    u = build_bimodal(EX3)
    p = stribeck()
    cfg = IntegratorConfig()
    a = simulate_lugre(p, u, 100.0, 4, cfg)
    half = cfg.halved()
    b = simulate_lugre(p, u, 100.0, 4, half)
    ta, ya = a.period_slice(3)
    tb, yb = b.period_slice(3)
    np.testing.assert_array_equal(ta, tb)
    assert np.max(np.abs(ya - yb)) < 10 * half.rel_tol


@settings(max_examples=15)
@given(spec=bimodal_specs(), sigma0=st.floats(0.5, 4.0))
def test_tolerance_halving_property(spec, sigma0):
    u = build_bimodal(spec)
    p = stribeck(sigma0=sigma0)
    cfg = IntegratorConfig(samples_per_piece=16)
    a = simulate_lugre(p, u, 50.0, 2, cfg).period_slice(1)[1]
    b = simulate_lugre(p, u, 50.0, 2, cfg.halved()).period_slice(1)[1]
    assert np.max(np.abs(a - b)) < 10 * cfg.halved().rel_tol * max(1.0, np.max(np.abs(b)))


def test_contraction_rate_at_large_gamma():
    u = build_bimodal(EX3)
    p = stribeck()
    gamma = 1000.0
    traj = simulate_lugre(p, u, gamma, 5)
    ref = y_circle(p, u)
    d = []
    for k in range(5):
        t, y = traj.period_slice(k)
        d.append(np.max(np.abs(y - ref(t - k * u.period))))
    target = math.exp(-p.sigma0 * u.total_variation / p.g0)
    for k in range(2):
        assert abs(d[k + 1] / d[k] / target - 1) < 0.2


# --- steady state detection ----------------------------------------------------


def _traj(t, y, period):
    return Trajectory(t=t, u=np.zeros_like(t), x=np.zeros_like(t), y=y, gamma=1.0, period=period)


def test_steady_state_already_periodic():
    t = np.linspace(0, 4, 401)
    assert steady_state_periods(_traj(t, np.sin(2 * np.pi * t), 1.0), 1.0, 1e-9) == 0


def test_steady_state_noise_not_converged():
    t = np.linspace(0, 6, 601)
    y = np.random.default_rng(3).standard_normal(t.size)
    assert steady_state_periods(_traj(t, y, 1.0), 1.0, 1e-3) is None


def test_steady_state_needs_two_periods():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        steady_state_periods(_traj(t, t, 1.0), 1.0, 1e-3)


def test_steady_state_example3():
    u = build_bimodal(EX3)
    traj = simulate_lugre(stribeck(), u, 100.0, 8)
    k = steady_state_periods(traj, u.period, 1e-3)
    assert k is not None and k <= 5


# --- cascade example ------------------------------------------------------------


@pytest.mark.parametrize("gamma", [20.0, 2000.0])
def test_example1_starts_at_rest(gamma):
    traj = simulate_example1(gamma, 1, IntegratorConfig(samples_per_piece=16))
    assert traj.t[0] == 0.0 and traj.y[0] == 0.0 and traj.x[0] == 0.0
    assert traj.period == gamma


def test_example1_tolerance_stability_at_2000():
    cfg = IntegratorConfig(samples_per_piece=32)
    a = simulate_example1(2000.0, 4, cfg)
    b = simulate_example1(2000.0, 4, cfg.halved())
    ta, ya = a.period_slice(3)
    tb, yb = b.period_slice(3)
    np.testing.assert_array_equal(ta, tb)
    assert np.max(np.abs(ya - yb)) < 5e-6


def test_example1_graph_close_to_dahl_loop():
    """At large gamma the filter output follows the slow Dahl loop."""
    from lugreloops.signal import sine_signal

    traj = simulate_example1(2000.0, 4, IntegratorConfig(samples_per_piece=64))
    ref = y_circle(ModelParams(sigma0=1.0, sigma1=0.0, g=ConstantDamping(1.0)), sine_signal(1.0))
    t, y = traj.period_slice(3)
    assert np.max(np.abs(y - ref(t / 2000.0))) < 5e-3


def test_runs_are_deterministic():
    u = build_bimodal(EX3)
    a = simulate_lugre(stribeck(), u, 10.0, 3)
    b = simulate_lugre(stribeck(), u, 10.0, 3)
    for f in ("t", "u", "x", "y"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()
