"""Segment-restarted integration of LuGre-type systems under periodic inputs.

``|u'|`` has corners wherever the input changes monotonicity, so each
monotone piece is integrated as its own smooth initial value problem and
the final state is chained into the next piece. Inside a piece an explicit
Dormand-Prince 5(4) pair with standard step-size control is used (or a
fixed-step RK4 for reproducibility checks). Output samples are hit exactly
by clipping the step, so every piece boundary is a sample time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .io import format_json, write_csv, write_json
from .model import DahlParams, ModelParams, lugre_output, lugre_rhs
from .signal import PeriodicSignal, sample_times, sine_signal

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "simulate_lugre",
    "simulate_dahl",
    "simulate_example1",
    "steady_state_periods",
]


class IntegrationError(RuntimeError):
    """Step size underflow or a non-finite state."""

    def __init__(self, msg: str, t: float):
        super().__init__(f"{msg} at t = {t:.17g}")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    samples_per_piece: int = 64
    scheme: Literal["adaptive", "rk4"] = "adaptive"
    rk4_substeps: int = 16

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.samples_per_piece < 1 or self.rk4_substeps < 1:
            raise ValueError("samples_per_piece and rk4_substeps must be >= 1")
        if self.scheme not in ("adaptive", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def halved(self) -> "IntegratorConfig":
        from dataclasses import replace

        return replace(self, rel_tol=self.rel_tol / 2, abs_tol=self.abs_tol / 2)


@dataclass(eq=False)
class Trajectory:
    """Sampled path ``(t, u, x, y)``.

    ``x`` is the internal state (a 1-D array for scalar states), ``y`` the
    output. ``period`` is the input period in the time units of ``t``.
    """

    t: np.ndarray
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    gamma: float
    period: float
    meta: dict = field(default_factory=dict)

    @property
    def n_periods(self) -> int:
        return int(round((self.t[-1] - self.t[0]) / self.period))

    def period_slice(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Times and outputs of period ``k`` (both ends included)."""
        lo, hi = k * self.period, (k + 1) * self.period
        eps = 1e-9 * self.period
        sel = (self.t >= lo - eps) & (self.t <= hi + eps)
        return self.t[sel], self.y[sel]

    def to_csv(self, path):
        return write_csv(path, ["t", "u", "x", "y"], [self.t, self.u, self.x, self.y])

    def meta_document(self) -> dict:
        return {"gamma": self.gamma, "period": self.period, "n_samples": int(self.t.size), **self.meta}

    def meta_json(self) -> str:
        return format_json(self.meta_document())

    def write_meta(self, path):
        return write_json(path, self.meta_document())


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


class _Stats:
    __slots__ = ("steps", "rejected", "max_err", "nfev")

    def __init__(self):
        self.steps = 0
        self.rejected = 0
        self.max_err = 0.0
        self.nfev = 0

    def as_dict(self) -> dict:
        return {"steps": self.steps, "rejected_steps": self.rejected,
                "max_local_error": self.max_err, "rhs_evaluations": self.nfev}


def _dopri_interval(f, t0, y, t1, h, cfg: IntegratorConfig, stats: _Stats, k1=None):
    """Advance from ``t0`` to exactly ``t1``; returns ``(y, h_next, k_last)``."""
    t = t0
    if k1 is None:
        k1 = f(t, y)
        stats.nfev += 1
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    scalar = isinstance(y, float)
    while t < t1:
        h = min(h, cfg.max_step)
        last = t + h >= t1
        step = t1 - t if last else h
        if step <= 1e-13 * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", t)
        k = [k1]
        for i in range(1, 7):
            yi = y
            for a, kj in zip(_A[i], k):
                if a:
                    yi = yi + step * a * kj
            k.append(f(t + _C[i] * step, yi))
        stats.nfev += 6
        y_new = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err_vec = step * sum(e * kj for e, kj in zip(_E, k) if e)
        if scalar:
            err = abs(err_vec) / (atol + rtol * max(abs(y), abs(y_new)))
            finite = math.isfinite(y_new)
        else:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            finite = bool(np.all(np.isfinite(y_new)))
        if not finite:
            raise IntegrationError("non-finite state", t)
        if err <= 1.0:
            t = t1 if last else t + step
            y = y_new
            k1 = k[6]
            stats.steps += 1
            stats.max_err = max(stats.max_err, err)
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            # a clipped final step says nothing about the natural step size
            h = max(h, step * fac) if last else step * fac
        else:
            stats.rejected += 1
            h = step * max(0.2, 0.9 * err ** -0.2)
    return y, h, k1


def _rk4_interval(f, t0, y, t1, cfg: IntegratorConfig, stats: _Stats):
    n = cfg.rk4_substeps
    h = (t1 - t0) / n
    t = t0
    for i in range(n):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        stats.steps += 1
        stats.nfev += 4
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite state", t1)
    return y


def _march(u: PeriodicSignal, n_periods: int, cfg: IntegratorConfig,
           rhs: Callable[[np.ndarray, float], np.ndarray], y0) -> tuple:
    """Integrate ``y' = rhs(y, u'(t))`` piece by piece over ``n_periods``.

    Returns sample times, states, input values and right-limit ``u'`` at
    each sample (the last sample takes the left limit).
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    S = cfg.samples_per_piece
    t_all = sample_times(u, n_periods, S)
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    states = np.empty((t_all.size, y.size))
    if y.size == 1:
        # scalar states run on Python floats; tiny-array numpy ops dominate otherwise
        y = float(y[0])
    udot = np.empty(t_all.size)
    states[0] = y
    stats = _Stats()
    idx = 0
    h = None
    for m in range(n_periods):
        off = m * u.period
        for k in range(u.n_pieces):
            if u.is_linear:
                slope = float(u.piece_slope(k, 0.0))

                def f(t, yy, _s=slope):
                    return rhs(yy, _s)
            else:
                def f(t, yy, _k=k, _off=off):
                    return rhs(yy, float(u.piece_slope(_k, t - _off)))

            k1 = None
            if h is None:
                h = (u.knots[k + 1] - u.knots[k]) / S
            for j in range(S):
                ta, tb = t_all[idx], t_all[idx + 1]
                udot[idx] = float(u.piece_slope(k, ta - off))
                if cfg.scheme == "adaptive":
                    y, h, k1 = _dopri_interval(f, ta, y, tb, h, cfg, stats, k1)
                else:
                    y = _rk4_interval(f, ta, y, tb, cfg, stats)
                idx += 1
                states[idx] = y
    last_k = u.n_pieces - 1
    udot[-1] = float(u.piece_slope(last_k, u.knots[-1]))
    return t_all, states, u(t_all), udot, stats


# ---------------------------------------------------------------------------
# Public simulations
# ---------------------------------------------------------------------------


def simulate_lugre(p: ModelParams, u: PeriodicSignal, gamma: float, n_periods: int,
                   cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the time-rescaled LuGre system over ``n_periods`` of ``u``.

    Time is the slow (rescaled) time of ``u`` itself; ``gamma`` enters only
    through ``g(u'/gamma)``, ``sigma1/gamma`` and ``f(u'/gamma)``.
    """
    if not (gamma > 0):
        raise ValueError("gamma must be positive")
    cfg = cfg or IntegratorConfig()
    decay: dict[float, float] = {}

    def rhs(zz, s):
        # g is only needed at the current slope; linear pieces reuse it
        c = decay.get(s)
        if c is None:
            c = decay[s] = p.sigma0 * abs(s) / float(p.g(s / gamma))
        return -c * zz + s

    t, z, uu, ud, stats = _march(u, n_periods, cfg, rhs, p.x0)
    z = z[:, 0]
    zdot = lugre_rhs(p, gamma, z, ud)
    y = lugre_output(p, gamma, z, zdot, ud)
    meta = stats.as_dict()
    meta.update(scheme=cfg.scheme, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, model="lugre")
    return Trajectory(t=t, u=uu, x=z, y=np.asarray(y, dtype=float), gamma=float(gamma),
                      period=u.period, meta=meta)


def simulate_dahl(d: DahlParams, u: PeriodicSignal, n_periods: int,
                  cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the native Dahl equations ``w' = rho (u' - |u'| w)``, ``y = Fc w``."""
    cfg = cfg or IntegratorConfig()
    rho = d.rho
    t, w, uu, _, stats = _march(u, n_periods, cfg, lambda ww, s: rho * (s - abs(s) * ww), d.w0)
    w = w[:, 0]
    meta = stats.as_dict()
    meta.update(scheme=cfg.scheme, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, model="dahl")
    return Trajectory(t=t, u=uu, x=w, y=d.Fc * w, gamma=1.0, period=u.period, meta=meta)


def _cascade_rhs(s_, s):
    x, y = s_
    return np.array([s - abs(s) * x, -y + x])


def simulate_example1(gamma: float, n_periods: int, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Dahl state followed by a unit low-pass filter, driven by ``sin(2 pi t / gamma)``.

    Integrated in physical time: ``x' = u' - |u'| x``, ``y' = -y + x`` with
    ``x(0) = y(0) = 0``. The trajectory's ``x`` is the Dahl state, ``y`` the
    filtered output.
    """
    if not (gamma > 0):
        raise ValueError("gamma must be positive")
    cfg = cfg or IntegratorConfig()
    u = sine_signal(period=1.0).scaled(gamma)
    t, s, uu, _, stats = _march(u, n_periods, cfg, _cascade_rhs, [0.0, 0.0])
    meta = stats.as_dict()
    meta.update(scheme=cfg.scheme, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, model="example1")
    return Trajectory(t=t, u=uu, x=s[:, 0], y=s[:, 1], gamma=float(gamma), period=u.period, meta=meta)


def steady_state_periods(traj: Trajectory, period: float, tol: float) -> int | None:
    """Smallest ``k`` with ``sup |y_k - y_{k+1}| < tol`` over one period.

    ``y_k`` is the output restricted to ``[kT, (k+1)T]``. Returns ``None``
    when no such ``k`` exists within the trajectory.
    """
    span = traj.t[-1] - traj.t[0]
    n = int(math.floor(span / period + 1e-9))
    if n < 2:
        raise ValueError("trajectory must span at least 2 periods")
    t0 = traj.t[0]
    grid = traj.t[(traj.t >= t0) & (traj.t <= t0 + period * (1 + 1e-12))]
    prev = np.interp(grid, traj.t, traj.y)
    for k in range(n - 1):
        nxt = np.interp(grid + (k + 1) * period, traj.t, traj.y)
        if float(np.max(np.abs(nxt - prev))) < tol:
            return k
        prev = nxt
    return None
