"""LuGre and Dahl dry-friction models.

The LuGre model relates a relative displacement ``u`` to a friction force
through an internal bristle deflection ``x``::

    x' = -sigma0 * |u'| / g(u') * x + u'
    F  = sigma0 * x + sigma1 * x' + f(u')

After the slow time-scale change ``t -> t / gamma`` the same system reads

    z' = -sigma0 * |u'| / g(u' / gamma) * z + u'
    y  = sigma0 * z + (sigma1 / gamma) * z' + f(u' / gamma)

which is what :func:`lugre_rhs` and :func:`lugre_output` evaluate. The Dahl
model is the special case ``g`` constant, ``sigma1 = 0`` and ``f = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "StribeckParams",
    "ConstantDamping",
    "StribeckDamping",
    "TabulatedDamping",
    "MacroDamping",
    "ZeroMap",
    "TabulatedMap",
    "VelocityMap",
    "ModelParams",
    "DahlParams",
    "eval_g",
    "lugre_rhs",
    "lugre_output",
    "dahl_to_lugre",
    "model_from_dict",
    "model_to_dict",
]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _finite(x: float) -> bool:
    return bool(np.isfinite(x))


# ---------------------------------------------------------------------------
# Macrodamping g
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StribeckParams:
    """Parameters of ``g(v) = Fc + (Fs - Fc) * exp(-|v / vs| ** beta)``."""

    Fc: float
    Fs: float
    vs: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("Fc", "Fs", "vs", "beta"):
            val = getattr(self, name)
            _require(_finite(val) and val > 0, f"{name} must be positive, got {val!r}")


@dataclass(frozen=True)
class ConstantDamping:
    level: float

    def __post_init__(self) -> None:
        _require(_finite(self.level) and self.level > 0,
                 f"constant g level must be positive, got {self.level!r}")

    def __call__(self, nu):
        return np.full_like(np.asarray(nu, dtype=float), self.level) if np.ndim(nu) else float(self.level)


@dataclass(frozen=True)
class StribeckDamping:
    params: StribeckParams

    def __call__(self, nu):
        p = self.params
        val = p.Fc + (p.Fs - p.Fc) * np.exp(-np.abs(np.asarray(nu, dtype=float) / p.vs) ** p.beta)
        return val if np.ndim(val) else float(val)


@dataclass(frozen=True, eq=False)
class TabulatedDamping:
    """Positive macrodamping given by samples, interpolated with PCHIP.

    Outside the table the end values are held constant, which keeps the
    function continuous, bounded and positive on the whole velocity axis.
    """

    nu: tuple[float, ...]
    values: tuple[float, ...]
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nu = np.asarray(self.nu, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        _require(nu.ndim == 1 and nu.size >= 2 and nu.shape == vals.shape,
                 "tabulated g needs two equal-length tables with at least 2 nodes")
        _require(bool(np.all(np.diff(nu) > 0)), "tabulated g nodes must be strictly increasing")
        _require(bool(np.all(np.isfinite(vals))), "tabulated g values must be finite")
        interp = PchipInterpolator(nu, vals, extrapolate=False)
        mids = 0.5 * (nu[1:] + nu[:-1])
        check = np.concatenate([vals, interp(mids)])
        _require(bool(np.all(check > 0)), "tabulated g must be strictly positive")
        object.__setattr__(self, "nu", tuple(float(v) for v in nu))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "_interp", interp)

    def __call__(self, nu):
        x = np.clip(np.asarray(nu, dtype=float), self.nu[0], self.nu[-1])
        val = self._interp(x)
        return val if np.ndim(val) else float(val)


MacroDamping = Union[ConstantDamping, StribeckDamping, TabulatedDamping]


def eval_g(g: MacroDamping, nu):
    """Evaluate the macrodamping function at velocity ``nu`` (scalar or array)."""
    return g(nu)


# ---------------------------------------------------------------------------
# Velocity map f
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroMap:
    def __call__(self, nu):
        return np.zeros_like(np.asarray(nu, dtype=float)) if np.ndim(nu) else 0.0


@dataclass(frozen=True, eq=False)
class TabulatedMap:
    """Continuous velocity map through samples; ``0`` must be a node with value ``0``."""

    nu: tuple[float, ...]
    values: tuple[float, ...]
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nu = np.asarray(self.nu, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        _require(nu.ndim == 1 and nu.size >= 2 and nu.shape == vals.shape,
                 "tabulated f needs two equal-length tables with at least 2 nodes")
        _require(bool(np.all(np.diff(nu) > 0)), "tabulated f nodes must be strictly increasing")
        _require(bool(np.all(np.isfinite(vals))), "tabulated f values must be finite")
        zero = np.flatnonzero(nu == 0.0)
        _require(zero.size == 1 and vals[zero[0]] == 0.0, "tabulated f must contain the node f(0) = 0")
        object.__setattr__(self, "nu", tuple(float(v) for v in nu))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "_interp", PchipInterpolator(nu, vals, extrapolate=False))

    def __call__(self, nu):
        x = np.clip(np.asarray(nu, dtype=float), self.nu[0], self.nu[-1])
        val = self._interp(x)
        return val if np.ndim(val) else float(val)


VelocityMap = Union[ZeroMap, TabulatedMap]


# ---------------------------------------------------------------------------
# Parameter sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """LuGre parameters. ``sigma1 = 0`` is accepted so that Dahl fits here too."""

    sigma0: float
    sigma1: float
    g: MacroDamping
    f: VelocityMap = field(default_factory=ZeroMap)
    x0: float = 0.0

    def __post_init__(self) -> None:
        _require(_finite(self.sigma0) and self.sigma0 > 0, f"sigma0 must be positive, got {self.sigma0!r}")
        _require(_finite(self.sigma1) and self.sigma1 >= 0, f"sigma1 must be nonnegative, got {self.sigma1!r}")
        _require(_finite(self.x0), "x0 must be finite")

    @property
    def g0(self) -> float:
        """``g(0)``, the only value of ``g`` that enters the hysteresis loop."""
        return float(self.g(0.0))

    def replace(self, **changes: Any) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class DahlParams:
    rho: float
    Fc: float
    w0: float = 0.0

    def __post_init__(self) -> None:
        _require(_finite(self.rho) and self.rho > 0, f"rho must be positive, got {self.rho!r}")
        _require(_finite(self.Fc) and self.Fc > 0, f"Fc must be positive, got {self.Fc!r}")
        _require(_finite(self.w0) and -1.0 <= self.w0 <= 1.0, f"w0 must lie in [-1, 1], got {self.w0!r}")


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


def lugre_rhs(p: ModelParams, gamma: float, z, udot):
    """Right-hand side of the rescaled LuGre state equation.

    ``g`` is evaluated at the rescaled velocity ``udot / gamma``.
    """
    return -p.sigma0 * np.abs(udot) / p.g(udot / gamma) * z + udot


def lugre_output(p: ModelParams, gamma: float, z, zdot, udot):
    """Friction force ``sigma0 z + (sigma1 / gamma) z' + f(udot / gamma)``.

    ``gamma = inf`` gives the slow limit, where the last two terms vanish.
    """
    return p.sigma0 * z + (p.sigma1 / gamma) * zdot + p.f(udot / gamma)


def dahl_to_lugre(d: DahlParams) -> ModelParams:
    """Express a Dahl model as a LuGre parameter set.

    The LuGre state relates to the Dahl state by ``w = sigma0 * x / Fc``.
    """
    sigma0 = d.rho * d.Fc
    return ModelParams(
        sigma0=sigma0,
        sigma1=0.0,
        g=ConstantDamping(d.Fc),
        f=ZeroMap(),
        x0=d.Fc * d.w0 / sigma0,
    )


# ---------------------------------------------------------------------------
# Config documents
# ---------------------------------------------------------------------------


class ConfigKeyError(KeyError):
    """A required key is missing from a config document."""

    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"missing config key {self.key!r}"


def _get(doc: dict, key: str, prefix: str = "") -> Any:
    if key not in doc:
        raise ConfigKeyError(prefix + key)
    return doc[key]


def _damping_from_dict(doc: dict) -> MacroDamping:
    kind = str(_get(doc, "kind", "g.")).lower()
    if kind == "constant":
        return ConstantDamping(float(_get(doc, "level", "g.")))
    if kind == "stribeck":
        return StribeckDamping(StribeckParams(
            Fc=float(_get(doc, "Fc", "g.")),
            Fs=float(_get(doc, "Fs", "g.")),
            vs=float(_get(doc, "vs", "g.")),
            beta=float(_get(doc, "beta", "g.")),
        ))
    if kind == "tabulated":
        return TabulatedDamping(tuple(_get(doc, "nu", "g.")), tuple(_get(doc, "values", "g.")))
    raise ValueError(f"unknown g.kind {kind!r} (expected constant, stribeck or tabulated)")


def _damping_to_dict(g: MacroDamping) -> dict:
    if isinstance(g, ConstantDamping):
        return {"kind": "constant", "level": g.level}
    if isinstance(g, StribeckDamping):
        p = g.params
        return {"kind": "stribeck", "Fc": p.Fc, "Fs": p.Fs, "vs": p.vs, "beta": p.beta}
    return {"kind": "tabulated", "nu": list(g.nu), "values": list(g.values)}


def _map_from_dict(doc: dict) -> VelocityMap:
    kind = str(_get(doc, "kind", "f.")).lower()
    if kind == "zero":
        return ZeroMap()
    if kind == "tabulated":
        return TabulatedMap(tuple(_get(doc, "nu", "f.")), tuple(_get(doc, "values", "f.")))
    raise ValueError(f"unknown f.kind {kind!r} (expected zero or tabulated)")


def _map_to_dict(f: VelocityMap) -> dict:
    if isinstance(f, ZeroMap):
        return {"kind": "zero"}
    return {"kind": "tabulated", "nu": list(f.nu), "values": list(f.values)}


def model_from_dict(doc: dict) -> ModelParams | DahlParams:
    """Build parameters from a config mapping.

    Either LuGre keys (``sigma0``, ``sigma1``, ``g``, ``f``, ``x0``) or a
    single ``dahl`` table with ``rho``, ``Fc``, ``w0``.
    """
    if "dahl" in doc:
        d = doc["dahl"]
        return DahlParams(
            rho=float(_get(d, "rho", "dahl.")),
            Fc=float(_get(d, "Fc", "dahl.")),
            w0=float(d.get("w0", 0.0)),
        )
    return ModelParams(
        sigma0=float(_get(doc, "sigma0")),
        sigma1=float(doc.get("sigma1", 0.0)),
        g=_damping_from_dict(_get(doc, "g")),
        f=_map_from_dict(doc.get("f", {"kind": "zero"})),
        x0=float(doc.get("x0", 0.0)),
    )


def model_to_dict(p: ModelParams | DahlParams) -> dict:
    if isinstance(p, DahlParams):
        return {"dahl": {"rho": p.rho, "Fc": p.Fc, "w0": p.w0}}
    return {
        "sigma0": p.sigma0,
        "sigma1": p.sigma1,
        "g": _damping_to_dict(p.g),
        "f": _map_to_dict(p.f),
        "x0": p.x0,
    }
