"""``spinbounce`` command-line driver.

Every failure prints one line ``error[<code>]: <message>`` on stderr and
exits nonzero; the code is the ``code`` attribute of the raised error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from spinbounce.config import RunConfig, parse_config
from spinbounce.exceptions import ConfigurationError, SpinBounceError
from spinbounce.filippov import simulate_bounce
from spinbounce.rigid import rigid_bounce
from spinbounce.serialization import (
    export_trajectory,
    fmt,
    ingest_measurements,
    sweep_to_csv,
    trajectory_to_dict,
)
from spinbounce.singularity import locate_two_fold, two_fold_report, vertical_lift_off_point
from spinbounce.surface import KelvinVoigtModel
from spinbounce.sweep import find_spin_reversal_manifold, omega_family, perturbation_experiment, sweep_ics

CONFIG_ENV = "SPINBOUNCE_CONFIG"

EXIT_CODES = {"usage": 2, "config": 2, "io": 4}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(SpinBounceError):
    code = "usage"


def _common(p):
    p.add_argument("--config", help=f"INI config file (default ${CONFIG_ENV})")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override any config key")
    p.add_argument("-o", "--output", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="store_true", help="log filled-in defaults")


def _model_flags(p):
    p.add_argument("--model", help="surface model name")
    for name in ("d1", "d2", "eta", "eps2", "eps", "g", "a", "b"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--max-step", type=float)
    p.add_argument("--velocity-scale", type=float)


def _state_flags(p):
    for flag in ("x", "xdot", "y", "ydot", "omega"):
        p.add_argument(f"--{flag}", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spinbounce", description="Bounce of a spinning ball on a compliant frictional surface.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("rigid", help="closed-form rigid bounce")
    _common(p)
    _state_flags(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--r", type=float)

    p = sub.add_parser("bounce", help="integrate one compliant bounce")
    _common(p)
    _model_flags(p)
    _state_flags(p)

    p = sub.add_parser("sweep", help="bounce over a touchdown grid")
    _common(p)
    _model_flags(p)
    p.add_argument("--grid-xdot", help="lo:hi:n or comma list")
    p.add_argument("--grid-ydot")
    p.add_argument("--grid-omega")
    p.add_argument("--n-jobs", type=int)

    p = sub.add_parser("manifold", help="bisect spin for lift-off without slip")
    _common(p)
    _model_flags(p)
    p.add_argument("--xdot", type=float)
    p.add_argument("--ydot", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)

    p = sub.add_parser("twofold", help="locate and classify the two-fold singularity")
    _common(p)
    _model_flags(p)
    p.add_argument("--seed", help="five comma-separated state values")

    p = sub.add_parser("perturb", help="nominal and spin-perturbed bounces")
    _common(p)
    _model_flags(p)
    _state_flags(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--preset", choices=("none", "rolling-lift-off"))

    p = sub.add_parser("ingest", help="nondimensionalise measured bounces")
    _common(p)
    p.add_argument("measurements", help="CSV with unit-tagged headers")
    p.add_argument("--ball-radius", type=float)
    p.add_argument("--time-unit", type=float)
    return parser


_FLAG_MAP = {
    "model": ("model", "name"),
    "d1": ("model", "d1"),
    "d2": ("model", "d2"),
    "eta": ("model", "eta"),
    "eps2": ("model", "eps2"),
    "eps": ("model", "eps"),
    "g": ("model", "g"),
    "a": ("model", "a"),
    "b": ("model", "b"),
    "rtol": ("integrator", "rtol"),
    "atol": ("integrator", "atol"),
    "max_step": ("integrator", "max_step"),
    "velocity_scale": ("units", "velocity_scale"),
    "ball_radius": ("units", "ball_radius"),
    "time_unit": ("units", "time_unit"),
    "x": ("initial", "x"),
    "y": ("initial", "y"),
    "omega": ("initial", "omega"),
    "grid_xdot": ("sweep", "x_dot"),
    "grid_ydot": ("sweep", "y_dot"),
    "grid_omega": ("sweep", "omega"),
    "n_jobs": ("sweep", "n_jobs"),
    "lo": ("manifold", "lo"),
    "hi": ("manifold", "hi"),
    "tol": ("manifold", "tol"),
    "max_iter": ("manifold", "max_iter"),
    "seed": ("twofold", "seed"),
    "delta": ("perturb", "delta"),
    "preset": ("perturb", "preset"),
    "output": ("output", "path"),
    "format": ("output", "format"),
    "r": ("rigid", "r"),
}


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        out[section.strip(), name.strip().lower()] = value.strip()
    for attr, target in _FLAG_MAP.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[target] = value
    state_section = "manifold" if args.command == "manifold" else "initial"
    for attr, key in (("xdot", "x_dot"), ("ydot", "y_dot")):
        value = getattr(args, attr, None)
        if value is not None:
            out[state_section, key] = value
    mu = getattr(args, "mu", None)
    if mu is not None:
        out["rigid" if args.command == "rigid" else "model", "mu"] = mu
    return out


def _read_config_text(args) -> str:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        return ""
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None


def _emit(cfg: RunConfig, text: str, stdout):
    if cfg.output_path in (None, "-"):
        stdout.write(text)
    else:
        Path(cfg.output_path).write_text(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def _state_dict(s):
    return {"x": s.x, "x_dot": s.x_dot, "y": s.y, "y_dot": s.y_dot, "omega": s.omega}


def _run(cfg: RunConfig, args, stdout):
    cmd = cfg.command
    if cmd == "rigid":
        out = rigid_bounce(cfg.state, cfg.rigid)
        f = out.final_state
        if cfg.output_format == "json":
            text = _json({
                "case": out.case_label.value,
                "final": _state_dict(f),
                "roll_entry_impulse": out.roll_entry_impulse,
            })
        else:
            text = f"case {out.case_label.value}\nx_dot {f.x_dot!r}\ny_dot {f.y_dot!r}\nomega {f.omega!r}\n"
        _emit(cfg, text, stdout)
    elif cmd == "bounce":
        tr = simulate_bounce(cfg.model, cfg.state.scale_velocities(cfg.velocity_scale), cfg.integrator)
        _emit(cfg, export_trajectory(tr, None, cfg.output_format), stdout)
    elif cmd == "sweep":
        grid = [s.scale_velocities(cfg.velocity_scale) for s in cfg.grid]
        records = sweep_ics(cfg.model, grid, cfg.integrator, n_jobs=cfg.n_jobs)
        if cfg.output_format == "json":
            text = _json([
                {"ic": _state_dict(r.ic), "H0": r.H0, "HF": r.HF, "phases": [p.value for p in r.phases],
                 "rolled": r.rolled, "error": r.error}
                for r in records
            ])
        else:
            text = sweep_to_csv(records)
        _emit(cfg, text, stdout)
    elif cmd == "manifold":
        m = cfg.manifold
        res = find_spin_reversal_manifold(
            cfg.model, omega_family(m.x_dot, m.y_dot), (m.lo, m.hi), tol=m.tol, max_iter=m.max_iter,
            config=cfg.integrator,
        )
        _emit(cfg, _json({
            "omega0": res.parameter, "bracket": list(res.bracket), "width": res.width, "HF": res.hf,
            "HF_left": res.hf_left, "HF_right": res.hf_right, "iterations": res.iterations,
            "left_rolled": res.left.rolled, "right_rolled": res.right.rolled,
        }), stdout)
    elif cmd == "twofold":
        seed = cfg.twofold_seed
        if seed is None:
            if isinstance(cfg.model, KelvinVoigtModel):
                _, y, v = vertical_lift_off_point(cfg.model)
            else:
                y, v = -0.2, 0.5
            seed = [0.0, 0.1, y, v, -0.1]
        s = locate_two_fold(cfg.model, seed)
        _emit(cfg, _json(two_fold_report(cfg.model, s).as_dict()), stdout)
    elif cmd == "perturb":
        res = perturbation_experiment(cfg.model, cfg.state, cfg.delta, cfg.integrator)
        doc = {"delta": cfg.delta}
        for key, tr in (("A", res.a), ("B", res.b), ("C", res.c)):
            doc[key] = {"HF": tr.final_slip, "phases": [p.value for p in tr.phase_sequence], **trajectory_to_dict(tr)}
        _emit(cfg, _json(doc), stdout)
    elif cmd == "ingest":
        try:
            text = Path(args.measurements).read_text()
        except OSError as exc:
            err = SpinBounceError(f"cannot read {args.measurements}: {exc.strerror}")
            err.code = "io"
            raise err from None
        res = ingest_measurements(text, cfg.units)
        for line, reason in res.rejected:
            print(f"rejected line {line}: {reason}", file=sys.stderr)
        if cfg.output_format == "json":
            out = _json([
                {"line": r.line, "surface": r.surface, "H0": h0, "HF": hf}
                for r, (h0, hf) in zip(res.records, res.pairs.tolist())
            ])
        else:
            rows = ["line,surface,H0,HF"] + [
                f"{r.line},{r.surface},{fmt(h0)},{fmt(hf)}" for r, (h0, hf) in zip(res.records, res.pairs.tolist())
            ]
            out = "\n".join(rows) + "\n"
        _emit(cfg, out, stdout)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigurationError(f"unknown command {cmd!r}")


def run_cli(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, stream=stderr, format="%(levelname)s %(name)s: %(message)s")
        cfg = parse_config(_read_config_text(args), _overrides(args), command=args.command)
        _run(cfg, args, stdout)
    except SpinBounceError as exc:
        message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error[{exc.code}]: {message}", file=stderr)
        return EXIT_CODES.get(exc.code, 1)
    except OSError as exc:
        print(f"error[io]: {exc}", file=stderr)
        return EXIT_CODES["io"]
    return 0


def main():  # pragma: no cover - console entry point
    sys.exit(run_cli())

