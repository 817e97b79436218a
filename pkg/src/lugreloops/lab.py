"""Convergence experiments and canned reproductions of the worked examples.

Three limits are exercised here:

* ``gamma -> inf``: simulated outputs approach the slow limit ``y*``
  (:func:`gamma_sweep`);
* ``k -> inf``: period slices of ``y*`` approach the periodic ``y°`` at the
  geometric rate ``exp(-sigma0 * rho_u(T) / g(0))`` (:func:`period_iteration`);
* both together for the Dahl-plus-low-pass cascade (:func:`example1_sweep`).

Graph distances are sup-norms at equal normalized parameter, which for the
unit-speed inputs used here is the same as equal time.
"""

from __future__ import annotations

import math
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .integrator import (
    IntegratorConfig,
    Trajectory,
    simulate_example1,
    simulate_lugre,
    steady_state_periods,
)
from .io import write_csv, write_json
from .loops import extract_minor_loop, limit_star, loop_closed_form, y_circle
from .model import (
    ConstantDamping,
    ModelParams,
    StribeckDamping,
    StribeckParams,
    model_to_dict,
)
from .signal import (
    BimodalInputSpec,
    PeriodicSignal,
    bimodal_to_dict,
    build_bimodal,
    normalize,
    sample_times,
    signal_to_csv,
    sine_signal,
    triangle_signal,
)

__all__ = [
    "SweepReport",
    "ExampleScenario",
    "SCENARIO_IDS",
    "scenario",
    "gamma_sweep",
    "example1_sweep",
    "period_iteration",
    "run_example",
    "run_examples",
]

DEFAULT_STEADY_TOL = 1e-9
MIN_DISCARD = 3
MAX_PERIODS = 400


@dataclass
class SweepReport:
    gammas: list[float]
    distances: list[float]
    periods_to_steady: list[int | None]
    reference: str

    def as_dict(self) -> dict:
        return {
            "gammas": list(self.gammas),
            "distances": list(self.distances),
            "periods_to_steady": list(self.periods_to_steady),
            "reference": self.reference,
        }


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _stribeck(sigma0: float) -> ModelParams:
    return ModelParams(sigma0=sigma0, sigma1=1.0,
                       g=StribeckDamping(StribeckParams(Fc=1.0, Fs=2.0, vs=1.0, beta=1.0)),
                       x0=0.0)


@dataclass(frozen=True, eq=False)
class ExampleScenario:
    """A worked example: model, input, and the gamma ladder to sweep.

    ``params`` of ``Example1`` describe its Dahl stage (``sigma0 = 1``,
    ``g = 1``), whose loop the filtered output converges to.
    """

    id: str
    params: ModelParams
    signal: PeriodicSignal
    gammas: tuple[float, ...]
    spec: BimodalInputSpec | None = None
    variants: dict = field(default_factory=dict)
    description: str = ""


SCENARIO_IDS = ("Example1", "Example2", "Example3", "Example4", "Example4b")


def scenario(sid: str) -> ExampleScenario:
    if sid == "Example1":
        return ExampleScenario(
            id=sid,
            params=ModelParams(sigma0=1.0, sigma1=0.0, g=ConstantDamping(1.0)),
            signal=sine_signal(1.0),
            gammas=(20.0, 200.0, 2000.0),
            description="Dahl state through a unit low-pass filter, input sin(2 pi t / gamma)",
        )
    if sid == "Example2":
        return ExampleScenario(
            id=sid, params=_stribeck(1.0), signal=triangle_signal(0.0, 1.0),
            gammas=(1.0, 10.0, 100.0),
            description="LuGre with Stribeck g, 2-periodic triangle input",
        )
    if sid == "Example3":
        spec = BimodalInputSpec(umin1=0.0, umin2=0.2, umax1=1.0, umax2=1.5)
        return ExampleScenario(
            id=sid, params=_stribeck(1.0), signal=build_bimodal(spec), spec=spec,
            gammas=(1.0, 10.0, 100.0),
            description="LuGre with Stribeck g, bimodal input 0 / 1 / 0.2 / 1.5",
        )
    if sid == "Example4":
        spec = BimodalInputSpec(umin1=0.0, umin2=0.5, umax1=1.0, umax2=1.5)
        v1 = BimodalInputSpec(umin1=0.0, umin2=0.2, umax1=1.0, umax2=1.5)
        return ExampleScenario(
            id=sid, params=_stribeck(6.0), signal=build_bimodal(spec), spec=spec,
            gammas=(1000.0,),
            variants={
                "sigma0_1": (_stribeck(1.0), spec),
                "sigma0_1_umin2_0.2": (_stribeck(1.0), v1),
            },
            description="sigma0 = 6, bimodal input 0 / 1 / 0.5 / 1.5, plus two variants",
        )
    if sid == "Example4b":
        spec = BimodalInputSpec(umin1=0.0, umin2=0.5, umax1=1.0, umax2=1.5)
        return ExampleScenario(
            id=sid, params=_stribeck(1.0), signal=build_bimodal(spec), spec=spec,
            gammas=(1000.0,),
            description="Example 4 input with sigma0 = 1",
        )
    raise KeyError(f"unknown scenario {sid!r}; valid ids: {', '.join(SCENARIO_IDS)}")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _periods_needed(p: ModelParams, u: PeriodicSignal, tol: float) -> int:
    a_v = p.sigma0 * u.total_variation / p.g0
    scale = max(1.0, p.g0 + abs(p.sigma0 * p.x0))
    return int(min(MAX_PERIODS, max(MIN_DISCARD + 3, math.ceil(math.log(10 * scale / tol) / a_v) + 3)))


def _steady_run(p: ModelParams, u: PeriodicSignal, gamma: float, cfg: IntegratorConfig,
                tol: float) -> tuple[Trajectory, int | None, int]:
    n = _periods_needed(p, u, tol)
    while True:
        traj = simulate_lugre(p, u, gamma, n, cfg)
        k = steady_state_periods(traj, u.period, tol)
        if k is not None or n >= MAX_PERIODS:
            break
        n = min(MAX_PERIODS, 2 * n)
    discard = max(MIN_DISCARD, k if k is not None else n - 1)
    discard = min(discard, traj.n_periods - 1)
    return traj, k, discard


def _sweep_point(args):
    p, u, gamma, cfg, tol = args
    traj, k, discard = _steady_run(p, u, gamma, cfg, tol)
    t, y = traj.period_slice(discard)
    return gamma, k, t, y, traj


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def gamma_sweep(p: ModelParams, u: PeriodicSignal, gammas: Sequence[float],
                cfg: IntegratorConfig | None = None,
                reference: str | Callable = "ystar",
                tol: float = DEFAULT_STEADY_TOL, workers: int = 1,
                return_trajectories: bool = False):
    """Sup distance between steady simulated outputs and a slow-limit reference.

    The first ``max(3, steady_state_periods)`` periods are discarded. The
    reference is evaluated at the same times: ``"ystar"`` (the transient
    limit), ``"ycircle"`` (its periodic steady state) or any callable of
    ``t``.
    """
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("gammas must be nonempty")
    if any(not (g > 0) for g in gammas):
        raise ValueError("gamma must be positive")
    cfg = cfg or IntegratorConfig()
    if reference == "ystar":
        ref, name = limit_star(p, u), "ystar"
    elif reference == "ycircle":
        ref, name = y_circle(p, u), "ycircle"
    elif callable(reference):
        ref, name = reference, getattr(reference, "__name__", "custom")
    else:
        raise ValueError(f"unknown reference {reference!r}")
    points = _map(_sweep_point, [(p, u, g, cfg, tol) for g in gammas], workers)
    dists, ks, trajs = [], [], []
    for g, k, t, y, traj in points:
        dists.append(float(np.max(np.abs(y - np.asarray(ref(t))))))
        ks.append(k)
        trajs.append(traj)
    rep = SweepReport(gammas=gammas, distances=dists, periods_to_steady=ks, reference=name)
    return (rep, trajs) if return_trajectories else rep


def _example1_point(args):
    gamma, cfg, n_periods, tol = args
    traj = simulate_example1(gamma, n_periods, cfg)
    k = steady_state_periods(traj, traj.period, tol)
    discard = min(max(MIN_DISCARD, k if k is not None else n_periods - 1), n_periods - 1)
    t, y = traj.period_slice(discard)
    return gamma, k, t - discard * traj.period, y, traj


def example1_sweep(gammas: Sequence[float] = (20.0, 200.0, 2000.0),
                   cfg: IntegratorConfig | None = None, n_periods: int = 6,
                   tol: float = 1e-7, workers: int = 1,
                   return_trajectories: bool = False):
    """Steady-state graph distance of the cascade to its slow hysteresis loop.

    The loop is the periodic slow limit of the Dahl stage (``sigma0 = g = 1``)
    under ``sin(2 pi s)``; the filtered output is compared at equal phase
    ``s = t / gamma``.
    """
    cfg = cfg or IntegratorConfig()
    s = scenario("Example1")
    ref = y_circle(s.params, s.signal)
    points = _map(_example1_point, [(float(g), cfg, n_periods, tol) for g in gammas], workers)
    dists, ks, trajs = [], [], []
    for g, k, t, y, traj in points:
        dists.append(float(np.max(np.abs(y - ref(t / g)))))
        ks.append(k)
        trajs.append(traj)
    rep = SweepReport(gammas=[float(g) for g in gammas], distances=dists,
                      periods_to_steady=ks, reference="ycircle")
    return (rep, trajs) if return_trajectories else rep


def period_iteration(p: ModelParams, u: PeriodicSignal, K: int = 6,
                     samples_per_piece: int = 64) -> list[tuple[int, float]]:
    """Sup distance of each period slice ``y*(t + kT)`` to ``y°(t)``, ``k = 0..K``."""
    ys = limit_star(p, u)
    yc = y_circle(p, u)
    grid = sample_times(u, 1, samples_per_piece)
    ref = yc(grid)
    return [(k, float(np.max(np.abs(ys(grid + k * u.period) - ref)))) for k in range(K + 1)]


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def _gamma_tag(g: float) -> str:
    return f"{g:g}"


def _loop_artifacts(d: Path, p: ModelParams, spec: BimodalInputSpec | None, u: PeriodicSignal,
                    prefix: str = "") -> dict:
    curve = loop_closed_form(p, normalize(u))
    curve.to_csv(d / f"{prefix}loop.csv")
    doc = {"loop": curve.summary()}
    if spec is not None:
        minor = extract_minor_loop(curve)
        minor.to_csv(d / f"{prefix}minor_loop.csv")
        doc["minor_loop"] = minor.summary()
    return doc


def _write_scenario(s: ExampleScenario, d: Path, cfg: IntegratorConfig, workers: int) -> None:
    u = s.signal
    signal_to_csv(u, d / "input.csv", samples_per_piece=cfg.samples_per_piece)
    doc: dict = {"scenario": s.id, "description": s.description, "model": model_to_dict(s.params)}
    if s.spec is not None:
        doc["input"] = bimodal_to_dict(s.spec)

    if s.id == "Example1":
        rep, trajs = example1_sweep(s.gammas, cfg, workers=workers, return_trajectories=True)
        for g, traj in zip(s.gammas, trajs):
            traj.to_csv(d / f"traj_gamma{_gamma_tag(g)}.csv")
    else:
        rep, trajs = gamma_sweep(s.params, u, s.gammas, cfg, reference="ystar",
                                 workers=workers, return_trajectories=True)
        for g, traj in zip(s.gammas, trajs):
            traj.to_csv(d / f"traj_gamma{_gamma_tag(g)}.csv")
    doc["sweep"] = rep.as_dict()

    K = 6
    ys = limit_star(s.params, u)
    t_star = sample_times(u, K + 1, cfg.samples_per_piece)
    write_csv(d / "ystar.csv", ["t", "u", "y"], [t_star, u(t_star), ys(t_star)])
    yc = y_circle(s.params, u)
    t_c = sample_times(u, 1, cfg.samples_per_piece)
    write_csv(d / "ycircle.csv", ["t", "u", "y"], [t_c, u(t_c), yc(t_c)])
    doc["period_iteration"] = [[k, dist] for k, dist in period_iteration(s.params, u, K, cfg.samples_per_piece)]
    doc["contraction_ratio"] = math.exp(-s.params.sigma0 * u.total_variation / s.params.g0)
    doc.update(_loop_artifacts(d, s.params, s.spec, u))
    if s.spec is not None:
        doc["rho5"] = normalize(u).rho5
    if s.variants:
        doc["variants"] = {}
        for name, (vp, vspec) in s.variants.items():
            doc["variants"][name] = {
                "model": model_to_dict(vp),
                "input": bimodal_to_dict(vspec),
                **_loop_artifacts(d, vp, vspec, build_bimodal(vspec), prefix=f"{name}_"),
            }
    write_json(d / "sweep.json", doc)


def run_example(s: ExampleScenario | str, outdir: str | os.PathLike,
                cfg: IntegratorConfig | None = None, workers: int = 1) -> list[Path]:
    """Write every data file of a scenario under ``outdir/<id>/``.

    Files are produced in a temporary sibling directory and moved into
    place only when complete, replacing any earlier run.
    """
    if isinstance(s, str):
        s = scenario(s)
    cfg = cfg or IntegratorConfig()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    target = outdir / s.id
    tmp = Path(tempfile.mkdtemp(prefix=f".{s.id}.", dir=outdir))
    os.chmod(tmp, 0o755)
    try:
        _write_scenario(s, tmp, cfg, workers)
        if target.exists():
            shutil.rmtree(target)
        os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return sorted(target.iterdir())


def run_examples(ids: Sequence[str], outdir, cfg: IntegratorConfig | None = None,
                 workers: int = 1) -> dict[str, list[Path]]:
    scenarios = [scenario(i) for i in ids]
    return {s.id: run_example(s, outdir, cfg, workers) for s in scenarios}
