"""Command-line front end.

Every subcommand reads one JSON config document::

    {
      "model": {"sigma0": 1, "sigma1": 1,
                "g": {"kind": "stribeck", "Fc": 1, "Fs": 2, "vs": 1, "beta": 1},
                "f": {"kind": "zero"}, "x0": 0},
      "input": {"umin1": 0, "umin2": 0.2, "umax1": 1, "umax2": 1.5},
      "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-10, "samples_per_piece": 64},
      "gamma": 100, "periods": 5, "gammas": [1, 10, 100]
    }

``"dahl": {"rho": .., "Fc": .., "w0": ..}`` may replace ``"model"``, and
``"input": {"builtin": "triangle" | "sine"}`` selects a built-in signal.
Command-line flags override the matching config keys.

Exit codes: 0 success, 2 invalid input or config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .integrator import IntegrationError, IntegratorConfig, simulate_lugre, steady_state_periods
from .io import format_json, write_csv, write_json
from .lab import SCENARIO_IDS, gamma_sweep, run_examples
from .loops import extract_minor_loop, loop_closed_form
from .model import ConfigKeyError, DahlParams, ModelParams, dahl_to_lugre, model_from_dict
from .signal import (
    BimodalInputSpec,
    InputSpecError,
    PeriodicSignal,
    bimodal_from_dict,
    build_bimodal,
    normalize,
    sine_signal,
    triangle_signal,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class CliError(Exception):
    def __init__(self, msg: str, code: int = EXIT_INVALID):
        super().__init__(msg)
        self.code = code


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise CliError(f"{path}: config must be a JSON object")
    return doc


def parse_model(doc: dict) -> ModelParams:
    has_model, has_dahl = "model" in doc, "dahl" in doc
    if has_model == has_dahl:
        raise CliError("config must define exactly one of 'model' or 'dahl'")
    m = model_from_dict({"dahl": doc["dahl"]} if has_dahl else doc["model"])
    return dahl_to_lugre(m) if isinstance(m, DahlParams) else m


def parse_input(doc: dict) -> tuple[PeriodicSignal, BimodalInputSpec | None]:
    if "input" not in doc:
        raise ConfigKeyError("input")
    inp = doc["input"]
    if not isinstance(inp, dict):
        raise CliError("'input' must be a table")
    if "builtin" in inp:
        if any(k in inp for k in ("umin1", "umin2", "umax1", "umax2")):
            raise CliError("input must be either a builtin signal or a bimodal spec, not both")
        name = str(inp["builtin"]).lower()
        if name == "triangle":
            return triangle_signal(float(inp.get("low", 0.0)), float(inp.get("high", 1.0))), None
        if name == "sine":
            return sine_signal(float(inp.get("period", 1.0)), float(inp.get("amplitude", 1.0))), None
        raise CliError(f"unknown builtin input {name!r} (expected triangle or sine)")
    spec = bimodal_from_dict(inp)
    return build_bimodal(spec), spec


def parse_integrator(doc: dict, tol: float | None) -> IntegratorConfig:
    opts = dict(doc.get("integrator", {}))
    if tol is not None:
        opts["rel_tol"] = tol
        opts["abs_tol"] = tol * 1e-2
    try:
        return IntegratorConfig(**opts)
    except TypeError as exc:
        raise CliError(f"bad integrator options: {exc}") from exc


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise CliError(f"{name} must be a number") from exc
    if not (v > 0 and np.isfinite(v)):
        raise CliError(f"{name} must be positive")
    return v


@contextmanager
def staged_output(outdir: str | os.PathLike):
    """Yield a scratch directory whose files move into ``outdir`` on success."""
    outdir = Path(outdir)
    parent = outdir.parent if outdir.parent != Path("") else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".stage.", dir=parent))
    try:
        yield tmp
        outdir.mkdir(parents=True, exist_ok=True)
        for f in sorted(tmp.iterdir()):
            os.replace(f, outdir / f.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    p = parse_model(doc)
    u, _ = parse_input(doc)
    gamma = _positive("gamma", args.gamma if args.gamma is not None else doc.get("gamma", 1.0))
    periods = args.periods if args.periods is not None else doc.get("periods", 5)
    if int(periods) != periods or periods < 1:
        raise CliError("periods must be a positive integer")
    cfg = parse_integrator(doc, args.tol)
    traj = simulate_lugre(p, u, gamma, int(periods), cfg)
    k = steady_state_periods(traj, u.period, 1e-6) if traj.n_periods >= 2 else None
    name = f"traj_gamma{gamma:g}"
    with staged_output(args.out) as tmp:
        if args.format == "csv":
            traj.to_csv(tmp / f"{name}.csv")
            traj.write_meta(tmp / f"{name}_meta.json")
        else:
            write_json(tmp / f"{name}.json", {
                "t": traj.t, "u": traj.u, "x": traj.x, "y": traj.y, "meta": traj.meta_document(),
            })
    print(f"gamma: {gamma:g}")
    print(f"periods: {traj.n_periods}")
    print(f"periods_to_steady: {'not converged' if k is None else k}")
    print(f"max_abs_y: {float(np.max(np.abs(traj.y))):.17g}")
    print(f"wrote: {Path(args.out) / (name + '.' + args.format)}")
    return EXIT_OK


def _bimodal_only(doc: dict):
    u, spec = parse_input(doc)
    if spec is None:
        raise CliError("this command needs a bimodal input (umin1, umin2, umax1, umax2)")
    return u, spec


def cmd_loop(args) -> int:
    doc = load_config(args.config)
    p = parse_model(doc)
    u, _ = _bimodal_only(doc)
    curve = loop_closed_form(p, normalize(u))
    minor = extract_minor_loop(curve)
    summary = {"loop": curve.summary(), "minor_loop": minor.summary()}
    with staged_output(args.out) as tmp:
        if args.format == "csv":
            curve.to_csv(tmp / "loop.csv")
            minor.to_csv(tmp / "minor_loop.csv")
        else:
            write_json(tmp / "loop.json", {"rho": curve.rho, "psi": curve.psi, "y": curve.y,
                                           "segment_index": curve.segment})
            write_json(tmp / "minor_loop.json", {"rho": minor.rho, "psi": minor.psi, "y": minor.y,
                                                 "segment_index": minor.arc})
        write_json(tmp / "summary.json", summary)
    sys.stdout.write(format_json(summary))
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    p = parse_model(doc)
    u, _ = parse_input(doc)
    gammas = args.gamma if args.gamma else doc.get("gammas", [1.0, 10.0, 100.0])
    gammas = [_positive("gamma", g) for g in gammas]
    cfg = parse_integrator(doc, args.tol)
    rep = gamma_sweep(p, u, gammas, cfg, reference=doc.get("reference", "ystar"))
    with staged_output(args.out) as tmp:
        if args.format == "csv":
            ks = [(-1 if k is None else k) for k in rep.periods_to_steady]
            write_csv(tmp / "sweep.csv", ["gamma", "distance", "periods_to_steady"],
                      [rep.gammas, rep.distances, ks])
        else:
            write_json(tmp / "sweep.json", rep.as_dict())
    sys.stdout.write(format_json(rep.as_dict()))
    return EXIT_OK


def cmd_normalize(args) -> int:
    doc = load_config(args.config)
    u, spec = parse_input(doc)
    n = normalize(u)
    out = {"rho": list(n.rho[1:]), "psi_at_rho": list(n.values)}
    if n.rho5 is not None:
        out["rho5"] = n.rho5
        out["degenerate"] = n.degenerate
    if args.format == "csv":
        sys.stdout.write("rho,psi\n")
        for r, v in zip(n.rho, n.values):
            sys.stdout.write(f"{r:.17g},{v:.17g}\n")
    else:
        sys.stdout.write(format_json(out))
    return EXIT_OK


def cmd_examples(args) -> int:
    which = args.which
    if which == "all":
        ids = list(SCENARIO_IDS)
    elif which in SCENARIO_IDS:
        ids = [which]
    else:
        raise CliError(f"unknown example {which!r}; valid ids: all, {', '.join(SCENARIO_IDS)}")
    doc = load_config(args.config) if args.config else {}
    cfg = parse_integrator(doc, args.tol)
    produced = run_examples(ids, args.out, cfg, workers=args.workers)
    for sid, files in produced.items():
        print(f"{sid}/")
        for f in files:
            print(f"  {f.name}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lugreloops",
        description="Hysteresis and minor loops of the LuGre and Dahl friction models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def common(sp, *, out=True, fmt=True, tol=True, config_required=True):
        sp.add_argument("--config", required=config_required, metavar="PATH",
                        help="JSON config document")
        if out:
            sp.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv",
                            help="output format (default: csv)")
        if tol:
            sp.add_argument("--tol", type=float, default=None, metavar="TOL",
                            help="integrator relative tolerance (absolute = TOL / 100)")

    sp = sub.add_parser("simulate", help="simulate the time-rescaled model")
    common(sp)
    sp.add_argument("--gamma", type=float, default=None, help="time-scale factor (> 0)")
    sp.add_argument("--periods", type=int, default=None, help="number of input periods")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("loop", help="closed-form hysteresis loop and minor loop")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_loop)

    sp = sub.add_parser("sweep", help="distance of simulated outputs to the slow limit over gamma")
    common(sp)
    sp.add_argument("--gamma", type=float, action="append", default=None,
                    help="time-scale factor; repeat for several")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("normalize", help="print the normalized-input breakpoints")
    sp.add_argument("--config", required=True, metavar="PATH", help="JSON config document")
    sp.add_argument("--format", choices=("csv", "json"), default="json",
                    help="output format (default: json)")
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("examples", help="write the data files of the worked examples")
    sp.add_argument("--which", default="all", metavar="ID",
                    help=f"scenario id or 'all' ({', '.join(SCENARIO_IDS)})")
    sp.add_argument("--out", default="results", metavar="DIR", help="output directory (default: results)")
    sp.add_argument("--config", default=None, metavar="PATH", help="optional config with integrator options")
    sp.add_argument("--tol", type=float, default=None, metavar="TOL",
                    help="integrator relative tolerance (absolute = TOL / 100)")
    sp.add_argument("--workers", type=int, default=1, help="parallel processes (default: 1)")
    sp.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IntegrationError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputSpecError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
