"""Run configuration: INI text plus command-line overrides.

Precedence is flags over file over defaults. Every key has a default and a
one-line description in :data:`SCHEMA`; the defaults that were filled in are
logged at INFO level and kept on the config for inspection.
"""

from __future__ import annotations

import configparser
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from spinbounce.core import BallState, UnitSystem
from spinbounce.exceptions import ConfigurationError
from spinbounce.filippov import IntegratorConfig
from spinbounce.rigid import RigidParams
from spinbounce.surface import CATALOG, SurfaceModel, make_model

log = logging.getLogger(__name__)

COMMANDS = ("rigid", "bounce", "sweep", "manifold", "twofold", "perturb", "ingest")

#: Model parameters accepted per catalog entry.
MODEL_KEYS = {
    "kv": ("d1", "d2", "eta", "eps2", "mu", "g"),
    "kv-depth-stiffening": ("d1", "d2", "eps", "mu", "g", "a", "b"),
}

# section -> key -> (kind, default, description)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {"command": ("str", None, "subcommand when none is given on the command line")},
    "model": {
        "name": ("str", "kv", "surface model: " + ", ".join(CATALOG)),
        "d1": ("float", 0.2, "tangential damping ratio"),
        "d2": ("float", 0.2, "normal damping ratio, below 1"),
        "eta": ("float", 0.1, "normal over tangential compliance scale (kv)"),
        "eps2": ("float", 1e-3, "normal compliance scale (kv)"),
        "eps": ("float", 0.1, "small parameter of the generalised model"),
        "mu": ("float", 0.3, "friction coefficient"),
        "g": ("float", 0.0, "gravity in rescaled units"),
        "a": ("float", 1.0, "depth stiffening rate (kv-depth-stiffening)"),
        "b": ("float", 0.5, "speed hardening of tangential damping (kv-depth-stiffening)"),
    },
    "initial": {
        "x": ("float", 0.0, "tangential spring displacement at touchdown"),
        "x_dot": ("float", 0.3, "tangential velocity"),
        "y": ("float", 0.0, "normal displacement"),
        "y_dot": ("float", -1.0, "normal velocity, negative at impact"),
        "omega": ("float", 0.0, "spin, positive is backspin"),
    },
    "integrator": {
        "rtol": ("float", 1e-9, "relative tolerance"),
        "atol": ("float", 1e-12, "absolute tolerance"),
        "event_tol": ("float", 1e-10, "event function tolerance"),
        "sliding_tol": ("float", 1e-8, "slip below which a state counts as on the surface"),
        "max_steps": ("int", 200_000, "step budget per bounce"),
        "max_tau": ("float", 1e4, "time horizon"),
        "max_step": ("float", math.inf, "largest step; smaller values give denser output"),
        "method": ("str", "DOP853", "DOP853 or RK45"),
    },
    "units": {
        "ball_radius": ("float", 0.0215, "ball radius in metres"),
        "time_unit": ("float", 1.0, "time unit in seconds"),
        "velocity_scale": ("float", 1.0, "factor applied to touchdown velocities before integration"),
    },
    "rigid": {
        "mu": ("float", 0.3, "friction coefficient"),
        "r": ("float", 0.5, "normal restitution"),
    },
    "sweep": {
        "x_dot": ("axis", "0.0711:1.81:5", "lo:hi:n or comma list"),
        "y_dot": ("axis", "-1.71:-0.216:5", "lo:hi:n or comma list"),
        "omega": ("axis", "-0.477:1.09:5", "lo:hi:n or comma list"),
        "n_jobs": ("int", 1, "parallel workers"),
    },
    "manifold": {
        "x_dot": ("float", 0.3, "fixed tangential velocity"),
        "y_dot": ("float", -1.0, "fixed normal velocity"),
        "lo": ("float", 0.5, "lower spin bracket"),
        "hi": ("float", 1.5, "upper spin bracket"),
        "tol": ("float", 1e-9, "target |H_F|"),
        "max_iter": ("int", 60, "bisection budget"),
    },
    "twofold": {"seed": ("vector", None, "five comma-separated state values")},
    "perturb": {
        "delta": ("float", 1e-3, "spin perturbation"),
        "preset": ("str", "none", "'rolling-lift-off' loads the calibrated model and state"),
    },
    "output": {
        "path": ("str", "-", "output file, '-' for stdout"),
        "format": ("str", "csv", "csv or json"),
    },
}


@dataclass(frozen=True)
class ManifoldSettings:
    x_dot: float
    y_dot: float
    lo: float
    hi: float
    tol: float
    max_iter: int


@dataclass
class RunConfig:
    command: str
    model_name: str
    model_params: dict
    model: SurfaceModel
    state: BallState
    integrator: IntegratorConfig
    units: UnitSystem
    velocity_scale: float
    rigid: Optional[RigidParams]
    grid_axes: Dict[str, List[float]]
    n_jobs: int
    manifold: ManifoldSettings
    twofold_seed: Optional[List[float]]
    delta: float
    preset: str
    output_path: str
    output_format: str
    defaults_used: List[str] = field(default_factory=list)

    @property
    def grid(self) -> List[BallState]:
        ax = self.grid_axes
        return [BallState.touchdown(a, b, c) for a in ax["x_dot"] for b in ax["y_dot"] for c in ax["omega"]]


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> Dict[Tuple[Optional[str], Optional[str]], int]:
    index: Dict[Tuple[Optional[str], Optional[str]], int] = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), n)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


def _parse_axis(raw: str) -> List[float]:
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ValueError("axis must be lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("axis needs at least one point")
        if n == 1:
            return [lo]
        return [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    values = [float(v) for v in raw.split(",") if v.strip()]
    if not values:
        raise ValueError("empty axis")
    return values


def _convert(kind: str, raw):
    if not isinstance(raw, str):
        return raw
    if kind == "float":
        value = float(raw)
        if math.isnan(value):
            raise ValueError("NaN is not allowed")
        return value
    if kind == "int":
        return int(raw)
    if kind == "axis":
        return _parse_axis(raw)
    if kind == "vector":
        values = [float(v) for v in raw.split(",")]
        if len(values) != 5:
            raise ValueError("expected five comma-separated values")
        return values
    return raw.strip()


def parse_config(text: str = "", overrides: Optional[dict] = None, command: Optional[str] = None) -> RunConfig:
    """Build a validated :class:`RunConfig`.

    ``overrides`` maps ``(section, key)`` to raw strings or values and wins
    over the file. Error messages carry the offending line number.
    """
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigurationError(f"malformed config: {exc.message.splitlines()[0]}", line) from None

    raw: Dict[Tuple[str, str], object] = {}
    origin: Dict[Tuple[str, str], Optional[int]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]", lines.get((section, None)))
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]", lines.get((section, key)))
            raw[section, key] = value
            origin[section, key] = lines.get((section, key))
    for (section, key), value in (overrides or {}).items():
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigurationError(f"unknown override {section}.{key}")
        raw[section, key] = value
        origin[section, key] = None

    defaults_used: List[str] = []

    def get(section, key):
        kind, default, _ = SCHEMA[section][key]
        if (section, key) in raw:
            try:
                return _convert(kind, raw[section, key])
            except ValueError as exc:
                raise ConfigurationError(f"[{section}] {key}: {exc}", origin[section, key]) from None
        defaults_used.append(f"{section}.{key}")
        return _convert(kind, default) if default is not None else None

    def fail(message, section, key=None):
        raise ConfigurationError(f"[{section}] {message}", origin.get((section, key)) if key else lines.get((section, None)))

    cmd = command or get("run", "command")
    if cmd is None:
        raise ConfigurationError("no command given (set [run] command or pass a subcommand)")
    if cmd not in COMMANDS:
        fail(f"unknown command {cmd!r}; choose from {', '.join(COMMANDS)}", "run", "command")

    preset = get("perturb", "preset")
    if preset not in ("none", "rolling-lift-off"):
        fail(f"unknown preset {preset!r}", "perturb", "preset")

    name = get("model", "name")
    if name not in MODEL_KEYS:
        fail(f"unknown model {name!r}; choose from {', '.join(MODEL_KEYS)}", "model", "name")
    for section, key in raw:
        if section == "model" and key != "name" and key not in MODEL_KEYS[name]:
            fail(f"key {key!r} does not apply to model {name!r}", "model", key)
    params = {key: get("model", key) for key in MODEL_KEYS[name]}
    if preset == "rolling-lift-off" and cmd == "perturb":
        from spinbounce.calibration import ROLL_LIFT_STATE, rolling_lift_off_model

        model = rolling_lift_off_model()
        params = {k: getattr(model, k) for k in MODEL_KEYS["kv"]}
        name = "kv"
    else:
        try:
            model = make_model(name, **params)
        except ConfigurationError as exc:
            bad = next((k for k in params if str(exc).startswith(k + " ")), None)
            fail(str(exc), "model", bad)

    state_values = {k: get("initial", k) for k in ("x", "x_dot", "y", "y_dot", "omega")}
    if preset == "rolling-lift-off" and cmd == "perturb":
        state_values = dict(zip(("x", "x_dot", "y", "y_dot", "omega"), ROLL_LIFT_STATE.tolist()))
    try:
        state = BallState(**state_values)
    except ValueError as exc:
        fail(str(exc), "initial")

    integ_values = {k: get("integrator", k) for k in SCHEMA["integrator"]}
    try:
        integrator = IntegratorConfig(**integ_values)
    except ValueError as exc:
        bad = next((k for k in integ_values if k in str(exc)), None)
        fail(str(exc), "integrator", bad)

    try:
        units = UnitSystem(get("units", "ball_radius"), get("units", "time_unit"))
    except ConfigurationError as exc:
        bad = "ball_radius" if "ball_radius" in str(exc) else "time_unit"
        fail(str(exc), "units", bad)
    velocity_scale = get("units", "velocity_scale")
    if not velocity_scale > 0:
        fail("velocity_scale must be positive", "units", "velocity_scale")

    rigid = None
    rigid_mu, rigid_r = get("rigid", "mu"), get("rigid", "r")
    if cmd == "rigid":
        try:
            rigid = RigidParams(rigid_mu, rigid_r)
        except ConfigurationError as exc:
            fail(str(exc), "rigid", "mu" if str(exc).startswith("mu") else "r")

    axes = {k: get("sweep", k) for k in ("x_dot", "y_dot", "omega")}
    n_jobs = get("sweep", "n_jobs")
    manifold = ManifoldSettings(**{k: get("manifold", k) for k in SCHEMA["manifold"]})
    if not manifold.lo < manifold.hi:
        fail("lo must be below hi", "manifold", "lo")
    seed = get("twofold", "seed")
    delta = get("perturb", "delta")
    out_path = get("output", "path")
    out_format = get("output", "format")
    if out_format not in ("csv", "json"):
        fail(f"format must be csv or json, got {out_format!r}", "output", "format")

    if defaults_used:
        log.info("defaults filled: %s", ", ".join(defaults_used))
    return RunConfig(
        command=cmd,
        model_name=name,
        model_params=params,
        model=model,
        state=state,
        integrator=integrator,
        units=units,
        velocity_scale=velocity_scale,
        rigid=rigid,
        grid_axes=axes,
        n_jobs=n_jobs,
        manifold=manifold,
        twofold_seed=seed,
        delta=delta,
        preset=preset,
        output_path=out_path,
        output_format=out_format,
        defaults_used=defaults_used,
    )


def describe_schema() -> str:
    """Human-readable list of every key, its default and meaning."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key, (_, default, doc) in keys.items():
            out.append(f"  {key} = {default}    ; {doc}")
    return "\n".join(out)
