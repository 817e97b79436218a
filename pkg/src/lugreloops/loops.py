"""Slow-input limits of the LuGre output and the hysteresis loop they trace.

With ``a = sigma0 / g(0)`` and ``rho_u`` the variation of the input, the
slow limit ``y*`` solves ``dy/drho = sigma0 * sign(u') - a * y``, i.e.::

    y*(t) = sigma0 exp(-a rho_u(t)) (x0 + int_0^t exp(a rho_u) u' dtau)

and its periodic steady state ``y°`` is the same expression started from
the unique ``y°(0)`` with ``y°(T) = y°(0)``. On the normalized input each
monotone piece contributes one exponential arc, which gives the loop in
closed form. Neither ``sigma1`` nor ``f`` enter, and ``g`` only through
``g(0)``.

Exponentials are always taken relative to the start of the current piece
(``exp(-a (rho - rho_i))``) so that large ``a * rho`` cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import quad

from .io import write_csv
from .model import ModelParams
from .signal import NormalizedInput, PeriodicSignal

__all__ = [
    "LimitOutput",
    "LoopSegment",
    "LoopCurve",
    "MinorLoop",
    "limit_star",
    "y_star",
    "y_circle",
    "loop_closed_form",
    "extract_minor_loop",
    "loop_area",
    "trapezoid_area",
]

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-13, limit=200)


def _arc(y_start, delta, direction, g0, a):
    """Exponential arc of length ``delta`` (in variation) from ``y_start``."""
    e = np.expm1(-a * delta)
    return (1.0 + e) * y_start - direction * g0 * e


# ---------------------------------------------------------------------------
# y* and y°
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LimitOutput:
    """Evaluator for ``y*`` (``kind="star"``) or ``y°`` (``kind="circle"``).

    ``start`` is the value at ``t = 0``: ``sigma0 * x0`` for the transient
    limit, the periodic initial value for the steady one. ``method`` is
    ``"closed"`` (exponential arcs through the exact variation) or
    ``"quad"`` (adaptive quadrature of the integral in ``t``).
    """

    kind: Literal["star", "circle"]
    signal: PeriodicSignal
    sigma0: float
    g0: float
    start: float
    method: Literal["closed", "quad"]
    piece_gain: np.ndarray = field(repr=False)
    knot_values: np.ndarray = field(repr=False)

    @property
    def a(self) -> float:
        return self.sigma0 / self.g0

    @property
    def period(self) -> float:
        return self.signal.period

    def _partial(self, k: int, off: float, t: float) -> float:
        """Contribution of piece ``k`` from its start up to ``t`` (zero start value)."""
        u = self.signal
        t0 = off + u.knots[k]
        return _piece_integral(u, k, t0, t, self.sigma0, self.g0, self.method)

    def _start_of_period(self, m: int) -> float:
        if self.kind == "circle" or m == 0:
            return self.start
        decay = math.exp(-self.a * self.signal.total_variation)
        y = self.start
        for _ in range(m):
            y = decay * y + self._period_gain
        return y

    @property
    def _period_gain(self) -> float:
        return float(self._knots_for_start(0.0)[-1])

    def __call__(self, t):
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(ta < 0):
            raise ValueError("limit outputs are defined for t >= 0")
        u = self.signal
        m, tau, k = u._split(ta)
        uval = u(ta)
        out = np.empty_like(ta)
        cache: dict[int, np.ndarray] = {}
        for i in range(ta.size):
            mi, ki = int(m[i]), int(k[i])
            if self.kind == "circle":
                mi = 0
            if mi not in cache:
                cache[mi] = self._knots_for_start(self._start_of_period(mi))
            y_k = cache[mi][ki]
            delta = abs(uval[i] - u.values[ki])
            if self.method == "closed":
                out[i] = _arc(y_k, delta, u.directions[ki], self.g0, self.a)
            else:
                off = mi * u.period
                out[i] = math.exp(-self.a * delta) * y_k + self._partial(ki, off, off + tau[i])
        return out if np.ndim(t) else float(out[0])

    def _knots_for_start(self, y0: float) -> np.ndarray:
        u = self.signal
        vals = [y0]
        for k in range(u.n_pieces):
            inc = abs(u.values[k + 1] - u.values[k])
            vals.append(math.exp(-self.a * inc) * vals[-1] + self.piece_gain[k])
        return np.array(vals)


def _piece_integral(u: PeriodicSignal, k: int, t0: float, t1: float,
                    sigma0: float, g0: float, method: str) -> float:
    """``sigma0 * int_{t0}^{t1} exp(-a (rho(t1) - rho(tau))) u'(tau) dtau`` on piece ``k``."""
    a = sigma0 / g0
    if t1 <= t0:
        return 0.0
    off = t0 - u.knots[k]
    u1 = float(u._piece_value(k, t1 - off))
    if method == "closed":
        u0 = u.values[k]
        return float(-u.directions[k] * g0 * np.expm1(-a * abs(u1 - u0)))

    def integrand(tau):
        return math.exp(-a * abs(u1 - float(u._piece_value(k, tau - off)))) * float(u.piece_slope(k, tau - off))

    val, _ = quad(integrand, t0, t1, **_QUAD_OPTS)
    return sigma0 * val


def _gains(u: PeriodicSignal, sigma0: float, g0: float, method: str) -> np.ndarray:
    return np.array([
        _piece_integral(u, k, u.knots[k], u.knots[k + 1], sigma0, g0, method)
        for k in range(u.n_pieces)
    ])


def _limit(kind, p: ModelParams, u: PeriodicSignal, method: str, start: float | None) -> LimitOutput:
    g0 = p.g0
    gains = _gains(u, p.sigma0, g0, method)
    a = p.sigma0 / g0
    if start is None:
        # periodic start: y(T) = exp(-a V) y(0) + J  and  y(T) = y(0)
        j = 0.0
        for k in range(u.n_pieces):
            j = math.exp(-a * abs(u.values[k + 1] - u.values[k])) * j + gains[k]
        start = j / -math.expm1(-a * u.total_variation)
    out = LimitOutput(kind=kind, signal=u, sigma0=p.sigma0, g0=g0, start=float(start),
                      method=method, piece_gain=gains, knot_values=np.empty(0))
    object.__setattr__(out, "knot_values", out._knots_for_start(out.start))
    return out


def limit_star(p: ModelParams, u: PeriodicSignal, method: str = "auto") -> LimitOutput:
    """Transient slow limit ``y*`` started from ``sigma0 * x0``.

    ``method="auto"`` uses the closed form on piecewise-linear inputs and
    quadrature otherwise.
    """
    if method == "auto":
        method = "closed" if u.is_linear else "quad"
    return _limit("star", p, u, method, p.sigma0 * p.x0)


def y_star(p: ModelParams, u: PeriodicSignal, t, method: str = "auto"):
    return limit_star(p, u, method)(t)


def y_circle(p: ModelParams, u: PeriodicSignal, method: str = "quad") -> LimitOutput:
    """Periodic steady state ``y°`` of the slow limit, by quadrature in ``t``."""
    return _limit("circle", p, u, method, None)


# ---------------------------------------------------------------------------
# Closed-form loop on the normalized input
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopSegment:
    start: float
    end: float
    y_start: float
    direction: int

    def value(self, r, g0: float, a: float):
        return _arc(self.y_start, np.asarray(r) - self.start, self.direction, g0, a)


@dataclass(frozen=True, eq=False)
class LoopCurve:
    """Closed curve ``{(psi_u(r), y°(r)) : r in [0, rho4]}``.

    ``rho``, ``psi``, ``y`` and ``segment`` hold the dense samples; every
    breakpoint (and ``rho5`` for bimodal inputs) is among them.
    """

    normalized: NormalizedInput
    sigma0: float
    g0: float
    segments: tuple[LoopSegment, ...]
    y_breakpoints: tuple[float, ...]
    rho: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    segment: np.ndarray = field(repr=False)

    @property
    def a(self) -> float:
        return self.sigma0 / self.g0

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.normalized.rho

    @property
    def rho5(self) -> float | None:
        return self.normalized.rho5

    def _segment_of(self, r):
        k = np.searchsorted(np.asarray(self.breakpoints), r, side="right") - 1
        return np.clip(k, 0, len(self.segments) - 1)

    def __call__(self, r):
        ra = np.atleast_1d(np.asarray(r, dtype=float))
        period = self.breakpoints[-1]
        ra = ra - np.floor(ra / period) * period
        k = self._segment_of(ra)
        out = np.empty_like(ra)
        for j in np.unique(k):
            sel = k == j
            out[sel] = self.segments[j].value(ra[sel], self.g0, self.a)
        return out if np.ndim(r) else float(out[0])

    def derivative(self, r):
        """Right derivative ``dy°/drho = sigma0 * psi' - a * y°``."""
        return self.sigma0 * self.normalized.slope(r) - self.a * self(r)

    def area(self) -> float:
        """Signed area (counter-clockwise positive); the loop runs clockwise."""
        return loop_area(self.psi, self.y)

    def energy(self) -> float:
        """Dissipated energy per cycle, ``oint y dpsi = -area``."""
        return -self.area()

    def to_csv(self, path):
        return write_csv(path, ["rho", "psi", "y", "segment_index"],
                         [self.rho, self.psi, self.y, self.segment])

    def summary(self) -> dict:
        doc = {
            "sigma0": self.sigma0,
            "g0": self.g0,
            "rho": list(self.breakpoints[1:]),
            "psi_at_rho": [float(v) for v in self.normalized.values],
            "y_at_rho": list(self.y_breakpoints),
            "major_area": self.area(),
            "major_energy": self.energy(),
        }
        if self.rho5 is not None:
            doc["rho5"] = self.rho5
        return doc


def _initial_value(n: NormalizedInput, g0: float, a: float) -> float:
    r = n.rho
    if n.is_bimodal:
        # 2e^{a r1} - 2e^{a r2} + 2e^{a r3} - e^{a r4} - 1, scaled by e^{-a r4}
        # and written with expm1 so that it stays accurate as a -> 0
        r1, r2, r3, r4 = r[1:5]
        num = (2 * math.expm1(-a * (r4 - r1)) - 2 * math.expm1(-a * (r4 - r2))
               + 2 * math.expm1(-a * (r4 - r3)) - math.expm1(-a * r4))
        return g0 * num / -math.expm1(-a * r4)
    rn = r[-1]
    dirs = n.directions
    num = sum(d * (math.expm1(-a * (rn - r[k + 1])) - math.expm1(-a * (rn - r[k])))
              for k, d in enumerate(dirs))
    return g0 * num / -math.expm1(-a * rn)


def loop_closed_form(p: ModelParams, n: NormalizedInput, samples_per_segment: int = 256) -> LoopCurve:
    """Hysteresis loop of the LuGre/Dahl model for normalized input ``n``.

    Rising pieces relax toward ``+g(0)``, falling pieces toward ``-g(0)``.
    Works for any number of monotone pieces; bimodal inputs use the
    four-segment expression for ``y°(0)``.
    """
    g0 = p.g0
    a = p.sigma0 / g0
    y0 = _initial_value(n, g0, a)
    dirs = n.directions
    segs, ybp = [], [y0]
    for k in range(n.n_pieces):
        seg = LoopSegment(n.rho[k], n.rho[k + 1], ybp[-1], int(dirs[k]))
        segs.append(seg)
        ybp.append(float(seg.value(seg.end, g0, a)))

    rho_parts, seg_parts = [], []
    S = samples_per_segment
    for k, seg in enumerate(segs):
        grid = seg.start + (seg.end - seg.start) * np.arange(S) / S
        if n.rho5 is not None and k == 2 and seg.start < n.rho5 < seg.end:
            grid = np.union1d(grid, [n.rho5])
        rho_parts.append(grid)
        seg_parts.append(np.full(grid.size, k))
    rho_parts.append(np.array([n.rho[-1]]))
    seg_parts.append(np.array([n.n_pieces - 1]))
    rho = np.concatenate(rho_parts)
    segment = np.concatenate(seg_parts)
    y = np.empty_like(rho)
    for k, seg in enumerate(segs):
        sel = segment == k
        y[sel] = seg.value(rho[sel], g0, a)
    psi = np.asarray(n(rho), dtype=float)
    # psi wraps to psi(0) at rho4 anyway; keep the exact closing value
    psi[-1] = n.values[-1]
    return LoopCurve(normalized=n, sigma0=p.sigma0, g0=g0, segments=tuple(segs),
                     y_breakpoints=tuple(float(v) for v in ybp),
                     rho=rho, psi=psi, y=y, segment=segment)


# ---------------------------------------------------------------------------
# Minor loop and areas
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MinorLoop:
    """The two arcs over ``[rho1, rho2]`` and ``[rho2, rho5]``."""

    rho: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    arc: np.ndarray = field(repr=False)
    rho_span: tuple[float, float]
    psi_span: tuple[float, float]
    closure_gap: float
    degenerate: bool
    area: float

    @property
    def arcs(self) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
        first = self.arc == 1
        # the sample at rho2 closes the first arc and opens the second
        i2 = int(np.flatnonzero(first)[-1])
        return ((self.psi[: i2 + 1], self.y[: i2 + 1]), (self.psi[i2:], self.y[i2:]))

    def to_csv(self, path):
        return write_csv(path, ["rho", "psi", "y", "segment_index"],
                         [self.rho, self.psi, self.y, self.arc])

    def summary(self) -> dict:
        return {
            "rho_span": list(self.rho_span),
            "psi_span": list(self.psi_span),
            "closure_gap": self.closure_gap,
            "degenerate": self.degenerate,
            "minor_area": self.area,
            "minor_energy": -self.area,
        }


def extract_minor_loop(c: LoopCurve) -> MinorLoop:
    n = c.normalized
    if not n.is_bimodal:
        raise ValueError("minor loop extraction needs a bimodal normalized input")
    r1, r2, r3 = n.rho[1], n.rho[2], n.rho[3]
    r5 = n.rho5
    sel = (c.rho >= r1) & (c.rho <= r5)
    rho, psi, y = c.rho[sel], c.psi[sel].copy(), c.y[sel].copy()
    if rho[-1] != r5:
        # rho5 == rho3: the sample at rho3 belongs to the next segment
        rho = np.append(rho, r5)
        psi = np.append(psi, n(r5))
        y = np.append(y, c.segments[2].value(r5, c.g0, c.a))
    # breakpoint samples carry the next segment's formula; use the arc's own end
    y[-1] = c.segments[2].value(r5, c.g0, c.a)
    psi[-1] = n.values[1]
    arc = np.where(rho <= r2, 1, 2)
    gap = abs(float(y[-1]) - float(y[0]))
    return MinorLoop(
        rho=rho, psi=psi, y=y, arc=arc,
        rho_span=(r1, r5),
        psi_span=(float(np.min(psi)), float(np.max(psi))),
        closure_gap=gap,
        degenerate=bool(r5 == r3),
        area=loop_area(psi, y),
    )


def _closed_polyline(psi, y, rho=None, rho_range=None):
    psi = np.asarray(psi, dtype=float)
    y = np.asarray(y, dtype=float)
    if psi.shape != y.shape or psi.ndim != 1 or psi.size < 2:
        raise ValueError("psi and y must be equal-length 1-D arrays")
    if rho_range is not None:
        if rho is None:
            raise ValueError("rho is required with rho_range")
        rho = np.asarray(rho, dtype=float)
        lo, hi = rho_range
        if not (np.any(rho == lo) and np.any(rho == hi)):
            raise ValueError("rho_range endpoints must be sample parameters")
        sel = (rho >= lo) & (rho <= hi)
        psi, y = psi[sel], y[sel]
    if abs(psi[0] - psi[-1]) > 1e-9:
        raise ValueError(f"polyline is not closed in psi: ends at {psi[0]!r} and {psi[-1]!r}")
    return psi, y


def loop_area(psi, y, rho=None, rho_range=None) -> float:
    """Signed shoelace area of the polyline closed by a vertical segment.

    Counter-clockwise traversal gives a positive area.
    """
    x, yy = _closed_polyline(psi, y, rho, rho_range)
    xn, yn = np.roll(x, -1), np.roll(yy, -1)
    return 0.5 * float(np.sum(x * yn - xn * yy))


def trapezoid_area(psi, y, rho=None, rho_range=None) -> float:
    """Same area as :func:`loop_area`, summed as trapezoids under each edge."""
    x, yy = _closed_polyline(psi, y, rho, rho_range)
    x = np.append(x, x[0])
    yy = np.append(yy, yy[0])
    total = 0.0
    for i in range(x.size - 1):
        total -= (x[i + 1] - x[i]) * (yy[i + 1] + yy[i]) / 2.0
    return total
