"""Periodic piecewise-monotone inputs and their normalized form.

A :class:`PeriodicSignal` is a chain of strictly monotone pieces. Each piece
joins ``(t0, u0)`` to ``(t1, u1)`` through a unit profile ``h`` with
``h(0) = 0`` and ``h(1) = 1``::

    u(t) = u0 + (u1 - u0) * h((t - t0) / (t1 - t0))

Because every piece is monotone, the variation ``int_0^t |u'|`` is known
exactly from the knot values, and the normalized input ``psi_u`` (the
slope +-1 signal with ``psi_u(rho_u(t)) = u(t)``) follows from the knot
values alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .io import write_csv

__all__ = [
    "InputSpecError",
    "LinearProfile",
    "TabulatedProfile",
    "CallableProfile",
    "PeriodicSignal",
    "BimodalInputSpec",
    "NormalizedInput",
    "build_bimodal",
    "variation",
    "normalize",
    "time_scale",
    "piecewise_linear_signal",
    "sine_signal",
    "triangle_signal",
    "bimodal_from_dict",
    "bimodal_to_dict",
    "signal_to_csv",
]


class InputSpecError(ValueError):
    """An input specification violates the bimodal ordering constraints."""


# ---------------------------------------------------------------------------
# Unit profiles
# ---------------------------------------------------------------------------


class LinearProfile:
    kind = "linear"

    def h(self, s):
        return s

    def dh(self, s):
        return np.ones_like(s) if np.ndim(s) else 1.0

    def __eq__(self, other):
        return isinstance(other, LinearProfile)

    def __hash__(self):
        return hash("linear")

    def __repr__(self):
        return "LinearProfile()"


class TabulatedProfile:
    """Strictly increasing unit profile through user samples (PCHIP)."""

    kind = "tabulated"

    def __init__(self, s: Sequence[float], h: Sequence[float]):
        s = np.asarray(s, dtype=float)
        hv = np.asarray(h, dtype=float)
        if s.ndim != 1 or s.shape != hv.shape or s.size < 2:
            raise InputSpecError("profile table needs two equal-length arrays with >= 2 nodes")
        if s[0] != 0.0 or s[-1] != 1.0 or hv[0] != 0.0 or hv[-1] != 1.0:
            raise InputSpecError("profile table must run from (0, 0) to (1, 1)")
        if not (np.all(np.diff(s) > 0) and np.all(np.diff(hv) > 0)):
            raise InputSpecError("profile table must be strictly increasing in both columns")
        self.s = tuple(s.tolist())
        self.values = tuple(hv.tolist())
        self._p = PchipInterpolator(s, hv)
        self._dp = self._p.derivative()

    def h(self, s):
        v = self._p(np.clip(s, 0.0, 1.0))
        return v if np.ndim(v) else float(v)

    def dh(self, s):
        v = self._dp(np.clip(s, 0.0, 1.0))
        return v if np.ndim(v) else float(v)

    def __repr__(self):
        return f"TabulatedProfile(n={len(self.s)})"


class CallableProfile:
    """Profile from a closed-form function and its derivative (vectorized)."""

    kind = "callable"

    def __init__(self, h: Callable, dh: Callable, name: str = "callable"):
        self._h, self._dh, self.name = h, dh, name

    def h(self, s):
        return self._h(s)

    def dh(self, s):
        return self._dh(s)

    def __repr__(self):
        return f"CallableProfile({self.name})"


LINEAR = LinearProfile()


# ---------------------------------------------------------------------------
# Periodic signals
# ---------------------------------------------------------------------------


class PeriodicSignal:
    """Periodic input made of monotone pieces between ``knots``.

    Parameters
    ----------
    knots : sequence of float
        ``0 = knots[0] < knots[1] < ... < knots[-1] = period``.
    values : sequence of float
        Signal value at each knot. ``values[-1]`` must equal ``values[0]``.
    profiles : sequence, optional
        One unit profile per piece; linear by default.
    allow_flat : bool
        Accept constant pieces. Only meant for degenerate test signals.
    """

    def __init__(self, knots, values, profiles=None, *, allow_flat: bool = False):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise InputSpecError("knots and values must be equal-length 1-D arrays with >= 2 entries")
        if knots[0] != 0.0:
            raise InputSpecError("first knot must be t = 0")
        if not np.all(np.diff(knots) > 0):
            raise InputSpecError("knots must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InputSpecError("values must be finite")
        if abs(values[-1] - values[0]) > 1e-12 * max(1.0, abs(values[0])):
            raise InputSpecError("signal must be periodic: value at the last knot must equal the first")
        values[-1] = values[0]
        inc = np.diff(values)
        if not allow_flat and np.any(inc == 0):
            raise InputSpecError("every piece must be strictly monotone")
        n = knots.size - 1
        if profiles is None:
            profiles = [LINEAR] * n
        profiles = list(profiles)
        if len(profiles) != n:
            raise InputSpecError(f"expected {n} profiles, got {len(profiles)}")

        self.knots = knots
        self.values = values
        self.profiles = tuple(profiles)
        self.period = float(knots[-1])
        self.directions = np.sign(inc)
        cum = [0.0]
        for d in np.abs(inc):
            cum.append(cum[-1] + float(d))
        self.cum_variation = np.array(cum)
        self.total_variation = float(cum[-1])
        self._linear = all(isinstance(p, LinearProfile) for p in self.profiles)

    @property
    def n_pieces(self) -> int:
        return self.knots.size - 1

    @property
    def is_linear(self) -> bool:
        return self._linear

    def __repr__(self):
        return f"PeriodicSignal(knots={self.knots.tolist()}, values={self.values.tolist()})"

    # -- location ----------------------------------------------------------

    def _split(self, t):
        t = np.asarray(t, dtype=float)
        m = np.floor(t / self.period)
        tau = t - m * self.period
        # guard against tau == period from rounding
        wrap = tau >= self.period
        m = np.where(wrap, m + 1, m)
        tau = np.where(wrap, tau - self.period, tau)
        k = np.clip(np.searchsorted(self.knots, tau, side="right") - 1, 0, self.n_pieces - 1)
        return m, tau, k

    def _piece_value(self, k: int, tau):
        t0, t1 = self.knots[k], self.knots[k + 1]
        u0, u1 = self.values[k], self.values[k + 1]
        s = (tau - t0) / (t1 - t0)
        return u0 + (u1 - u0) * self.profiles[k].h(s)

    def piece_slope(self, k: int, tau):
        """``u'`` inside piece ``k`` at in-period time ``tau`` (no wrapping)."""
        t0, t1 = self.knots[k], self.knots[k + 1]
        u0, u1 = self.values[k], self.values[k + 1]
        s = (tau - t0) / (t1 - t0)
        return (u1 - u0) / (t1 - t0) * self.profiles[k].dh(s)

    def _eval(self, t, fn):
        m, tau, k = self._split(t)
        out = np.empty_like(tau)
        for j in np.unique(k):
            sel = k == j
            out[sel] = fn(int(j), tau[sel])
        return out

    def __call__(self, t):
        out = self._eval(np.atleast_1d(t), self._piece_value)
        return out if np.ndim(t) else float(out[0])

    def derivative(self, t):
        """Right derivative ``u'(t)`` (defined everywhere, a.e. equal to ``u'``)."""
        out = self._eval(np.atleast_1d(t), self.piece_slope)
        return out if np.ndim(t) else float(out[0])

    def variation(self, t):
        """``rho_u(t) = int_0^t |u'(tau)| dtau``, exact for monotone pieces."""
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(ta < 0):
            raise ValueError("variation is defined for t >= 0")
        m, tau, k = self._split(ta)
        u = self._eval(ta, self._piece_value)
        out = m * self.total_variation + self.cum_variation[k] + np.abs(u - self.values[k])
        return out if np.ndim(t) else float(out[0])

    def scaled(self, gamma: float) -> "PeriodicSignal":
        """``t -> u(t / gamma)``, a signal of period ``gamma * T``."""
        if not (math.isfinite(gamma) and gamma > 0):
            raise ValueError("gamma must be positive")
        return PeriodicSignal(self.knots * gamma, self.values, self.profiles,
                              allow_flat=bool(np.any(self.directions == 0)))


def variation(u: PeriodicSignal, t):
    return u.variation(t)


def time_scale(u: PeriodicSignal, gamma: float) -> PeriodicSignal:
    return u.scaled(gamma)


def piecewise_linear_signal(knots, values) -> PeriodicSignal:
    return PeriodicSignal(knots, values)


def triangle_signal(low: float = 0.0, high: float = 1.0) -> PeriodicSignal:
    """Unit-speed triangle wave: rises from ``low`` to ``high`` and back."""
    span = high - low
    return PeriodicSignal([0.0, span, 2 * span], [low, high, low])


def sine_signal(period: float = 1.0, amplitude: float = 1.0) -> PeriodicSignal:
    """``amplitude * sin(2 pi t / period)`` split at its extrema."""
    q = np.pi / 2
    rise0 = CallableProfile(lambda s: np.sin(q * s), lambda s: q * np.cos(q * s), "sin-rise")
    fall = CallableProfile(lambda s: 0.5 * (1 - np.cos(np.pi * s)), lambda s: 0.5 * np.pi * np.sin(np.pi * s), "cos-fall")
    rise1 = CallableProfile(lambda s: 1 - np.cos(q * s), lambda s: q * np.sin(q * s), "cos-rise")
    return PeriodicSignal(
        [0.0, period / 4, 3 * period / 4, period],
        [0.0, amplitude, -amplitude, 0.0],
        [rise0, fall, rise1],
    )


# ---------------------------------------------------------------------------
# Bimodal inputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BimodalInputSpec:
    """Two maxima and two minima per period.

    The signal starts at ``umin1``, rises to ``umax1``, falls to ``umin2``,
    rises to ``umax2`` and falls back to ``umin1`` at ``t4``. When the
    switching times are omitted every piece runs at unit speed, so the
    signal coincides with its normalized input.

    ``tables`` selects smooth pieces: either one ``(s, h)`` profile table
    shared by all four pieces or four of them.
    """

    umin1: float
    umin2: float
    umax1: float
    umax2: float
    t1: float | None = None
    t2: float | None = None
    t3: float | None = None
    t4: float | None = None
    tables: tuple | None = None

    def __post_init__(self) -> None:
        vals = (self.umin1, self.umin2, self.umax1, self.umax2)
        if not all(math.isfinite(v) for v in vals):
            raise InputSpecError("extrema must be finite")
        if not self.umin1 <= self.umin2:
            raise InputSpecError("bimodal input requires umin1 <= umin2")
        if not self.umin2 < self.umax1:
            raise InputSpecError("bimodal input requires umin2 < umax1")
        if not self.umax1 <= self.umax2:
            raise InputSpecError("bimodal input requires umax1 <= umax2")
        if self.umin1 == self.umin2 and self.umax1 == self.umax2:
            raise InputSpecError("bimodal input requires umin1 != umin2 or umax1 != umax2")
        times = (self.t1, self.t2, self.t3, self.t4)
        given = [t is not None for t in times]
        if any(given) and not all(given):
            raise InputSpecError("switching times t1..t4 must be given together or not at all")
        if all(given):
            t1, t2, t3, t4 = (float(t) for t in times)
            if not 0 < t1:
                raise InputSpecError("bimodal input requires 0 < t1")
            if not (t1 < t2 < t3 < t4):
                raise InputSpecError("bimodal input requires t1 < t2 < t3 < t4")
        if self.tables is not None and len(self.tables) not in (1, 4):
            raise InputSpecError("tables must hold one shared profile or four profiles")

    @property
    def breakpoint_values(self) -> tuple[float, float, float, float, float]:
        return (self.umin1, self.umax1, self.umin2, self.umax2, self.umin1)

    def switching_times(self) -> tuple[float, float, float, float]:
        if self.t1 is not None:
            return (float(self.t1), float(self.t2), float(self.t3), float(self.t4))
        n = normalized_breakpoints(self.umin1, self.umin2, self.umax1, self.umax2)
        return n[1:5]

    @property
    def shape(self) -> str:
        return "linear" if self.tables is None else "smooth"


def normalized_breakpoints(umin1, umin2, umax1, umax2) -> tuple[float, ...]:
    """``(rho0, ..., rho5)`` of the normalized bimodal input."""
    r1 = umax1 - umin1
    r2 = r1 + (umax1 - umin2)
    r3 = r2 + (umax2 - umin2)
    r4 = r3 + (umax2 - umin1)
    r5 = r2 + (umax1 - umin2)
    return (0.0, r1, r2, r3, r4, r5)


def build_bimodal(spec: BimodalInputSpec) -> PeriodicSignal:
    times = (0.0,) + spec.switching_times()
    profiles = None
    if spec.tables is not None:
        tabs = [TabulatedProfile(*t) for t in spec.tables]
        profiles = tabs * 4 if len(tabs) == 1 else tabs
    return PeriodicSignal(times, spec.breakpoint_values, profiles)


def bimodal_from_dict(doc: dict) -> BimodalInputSpec:
    from .model import ConfigKeyError

    for key in ("umin1", "umin2", "umax1", "umax2"):
        if key not in doc:
            raise ConfigKeyError(f"input.{key}")
    shape = doc.get("shape", "linear")
    tables = None
    if isinstance(shape, dict):
        if str(shape.get("kind", "smooth")).lower() != "smooth":
            raise InputSpecError(f"unknown input shape {shape!r}")
        if "tables" not in shape:
            raise ConfigKeyError("input.shape.tables")
        tables = tuple((tuple(s), tuple(h)) for s, h in shape["tables"])
    elif str(shape).lower() != "linear":
        raise InputSpecError(f"unknown input shape {shape!r} (expected 'linear' or a smooth table)")
    times = {k: (float(doc[k]) if doc.get(k) is not None else None) for k in ("t1", "t2", "t3", "t4")}
    return BimodalInputSpec(
        umin1=float(doc["umin1"]), umin2=float(doc["umin2"]),
        umax1=float(doc["umax1"]), umax2=float(doc["umax2"]),
        tables=tables, **times,
    )


def bimodal_to_dict(spec: BimodalInputSpec) -> dict:
    doc = {"umin1": spec.umin1, "umin2": spec.umin2, "umax1": spec.umax1, "umax2": spec.umax2}
    if spec.t1 is not None:
        doc.update(t1=spec.t1, t2=spec.t2, t3=spec.t3, t4=spec.t4)
    if spec.tables is None:
        doc["shape"] = "linear"
    else:
        doc["shape"] = {"kind": "smooth", "tables": [[list(s), list(h)] for s, h in spec.tables]}
    return doc


# ---------------------------------------------------------------------------
# Normalized input
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalizedInput:
    """Slope +-1 periodic signal ``psi_u`` on breakpoints ``rho``.

    For a bimodal input ``rho = (rho0, ..., rho4)`` and ``rho5`` is the
    first parameter after ``rho2`` where ``psi_u`` returns to ``umax1``.
    Inputs with more pieces are represented the same way; ``rho5`` is then
    ``None``.
    """

    rho: tuple[float, ...]
    values: tuple[float, ...]
    rho5: float | None = None
    _knots: np.ndarray = field(init=False, repr=False)
    _vals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        k = np.asarray(self.rho, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.shape != v.shape or k.size < 3 or k[0] != 0.0 or not np.all(np.diff(k) > 0):
            raise InputSpecError("normalized breakpoints must start at 0 and increase strictly")
        object.__setattr__(self, "_knots", k)
        object.__setattr__(self, "_vals", v)

    @property
    def period(self) -> float:
        return self.rho[-1]

    @property
    def n_pieces(self) -> int:
        return len(self.rho) - 1

    @property
    def directions(self) -> np.ndarray:
        return np.sign(np.diff(self._vals))

    @property
    def is_bimodal(self) -> bool:
        return self.n_pieces == 4 and self.directions.tolist() == [1.0, -1.0, 1.0, -1.0]

    @property
    def degenerate(self) -> bool:
        """The minor loop reaches the major-loop corner (``rho5 == rho3``)."""
        return self.rho5 is not None and self.rho5 == self.rho[3]

    def _wrap(self, r):
        r = np.asarray(r, dtype=float)
        return r - np.floor(r / self.period) * self.period

    def __call__(self, r):
        out = np.interp(self._wrap(r), self._knots, self._vals)
        return out if np.ndim(r) else float(out)

    def slope(self, r):
        """Right derivative of ``psi_u``: +1 or -1."""
        tau = self._wrap(np.atleast_1d(r))
        k = np.clip(np.searchsorted(self._knots, tau, side="right") - 1, 0, self.n_pieces - 1)
        out = self.directions[k]
        return out if np.ndim(r) else float(out[0])

    def as_signal(self) -> PeriodicSignal:
        return PeriodicSignal(self._knots, self._vals)


def normalize(u: PeriodicSignal) -> NormalizedInput:
    """Normalized input of a piecewise-monotone periodic signal."""
    if np.any(u.directions == 0):
        raise InputSpecError("normalized input needs strictly monotone pieces")
    vals = tuple(float(v) for v in u.values)
    if u.n_pieces == 4 and u.directions.tolist() == [1.0, -1.0, 1.0, -1.0]:
        umin1, umax1, umin2, umax2 = vals[:4]
        r = normalized_breakpoints(umin1, umin2, umax1, umax2)
        return NormalizedInput(r[:5], vals, rho5=r[5])
    return NormalizedInput(tuple(float(c) for c in u.cum_variation), vals)


def signal_to_csv(u: PeriodicSignal, path, samples_per_piece: int = 64, n_periods: int = 1):
    """Write ``t,u,udot`` samples; knots appear exactly."""
    t = sample_times(u, n_periods, samples_per_piece)
    return write_csv(path, ["t", "u", "udot"], [t, u(t), u.derivative(t)])


def sample_times(u: PeriodicSignal, n_periods: int, samples_per_piece: int) -> np.ndarray:
    """Uniform samples inside each piece, with every knot included once."""
    chunks = []
    for m in range(n_periods):
        off = m * u.period
        for k in range(u.n_pieces):
            a, b = u.knots[k], u.knots[k + 1]
            chunks.append(off + a + (b - a) * np.arange(samples_per_piece) / samples_per_piece)
    chunks.append(np.array([n_periods * u.period]))
    return np.concatenate(chunks)
