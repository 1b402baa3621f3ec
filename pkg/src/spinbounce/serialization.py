"""CSV/JSON writers and readers, and ingestion of measured bounces."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from spinbounce.core import (
    RPM_TO_RAD_PER_S,
    BallState,
    PhaseTag,
    UnitSystem,
    nondimensionalize_record,
)
from spinbounce.exceptions import IngestError
from spinbounce.filippov import Event, EventKind, Trajectory

TRAJECTORY_COLUMNS = ("tau", "x", "xdot", "y", "ydot", "omega", "H", "LambdaN", "LambdaT", "phase")
SWEEP_COLUMNS = ("index", "xdot0", "ydot0", "omega0", "H0", "HF", "rolled", "phases", "error")


def fmt(value: float) -> str:
    """Fixed 17-significant-digit rendering, stable across runs."""
    return format(float(value), ".17g")


def _rows(traj: Trajectory):
    for i in range(len(traj)):
        s = traj.states[i]
        yield [
            traj.tau[i], s[0], s[1], s[2], s[3], s[4], s[1] + s[4], traj.lambda_n[i], traj.lambda_t[i]
        ], traj.phases[i].value


def _event_dict(ev: Event) -> dict:
    return {
        "kind": ev.kind.value,
        "tau": float(fmt(ev.tau)),
        "state": [float(fmt(v)) for v in ev.state.as_array()],
        "into": ev.into.value if ev.into is not None else None,
        "degenerate": ev.degenerate,
    }


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    for values, phase in _rows(traj):
        buf.write(",".join(fmt(v) for v in values) + "," + phase + "\n")
    return buf.getvalue()


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "columns": list(TRAJECTORY_COLUMNS),
        "samples": [[float(fmt(v)) for v in values] + [phase] for values, phase in _rows(traj)],
        "events": [_event_dict(e) for e in traj.events],
    }


def trajectory_to_json(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_dict(traj), indent=1) + "\n"


def export_trajectory(traj: Trajectory, path: Union[str, Path, None], fmt_name: str = "csv") -> str:
    """Render ``traj`` as CSV or JSON, write it to ``path`` (unless None) and return the text."""
    if fmt_name == "csv":
        text = trajectory_to_csv(traj)
    elif fmt_name == "json":
        text = trajectory_to_json(traj)
    else:
        raise ValueError(f"unknown format {fmt_name!r}")
    if path not in (None, "-"):
        Path(path).write_text(text)
    return text


def _from_rows(rows: Sequence[Sequence], events: List[Event]) -> Trajectory:
    arr = np.array([[float(v) for v in r[:9]] for r in rows], dtype=float).reshape(-1, 9)
    return Trajectory(
        tau=arr[:, 0],
        states=arr[:, 1:6].copy(),
        phases=[PhaseTag(r[9]) for r in rows],
        lambda_n=arr[:, 7],
        lambda_t=arr[:, 8],
        events=events,
    )


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    """Read a file written by :func:`export_trajectory`."""
    return parse_trajectory(Path(path).read_text())


def parse_trajectory(text: str) -> Trajectory:
    """Inverse of the CSV and JSON renderers; the format is detected from content."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if tuple(doc.get("columns", ())) != TRAJECTORY_COLUMNS:
            raise ValueError("unexpected trajectory columns")
        events = [
            Event(
                EventKind(e["kind"]),
                e["tau"],
                BallState.from_array(e["state"]),
                PhaseTag(e["into"]) if e["into"] else None,
                e["degenerate"],
            )
            for e in doc["events"]
        ]
        return _from_rows(doc["samples"], events)
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected trajectory header {header}")
    return _from_rows([row for row in reader if row], [])


def sweep_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for i, rec in enumerate(records):
        phases = "|".join(p.value for p in rec.phases)
        err = (rec.error or "").replace(",", ";").replace("\n", " ")
        buf.write(
            ",".join(
                [str(i), fmt(rec.ic.x_dot), fmt(rec.ic.y_dot), fmt(rec.ic.omega), fmt(rec.H0), fmt(rec.HF),
                 str(int(rec.rolled)), phases, err]
            )
            + "\n"
        )
    return buf.getvalue()


# --- measurements -------------------------------------------------------------

_HEADER_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*([^\]]+?)\s*\]\s*$")
_FIELDS = ("vx_in", "vy_in", "spin_in", "vx_out", "vy_out", "spin_out")
_VELOCITY_UNITS = {"m/s": 1.0}
_SPIN_UNITS = {"rpm": 1.0, "rad/s": 1.0 / RPM_TO_RAD_PER_S}
_LABEL_COLUMNS = ("surface", "label", "id")


@dataclass(frozen=True)
class MeasurementRecord:
    """One measured bounce in SI units (spin in rpm)."""

    incoming: Tuple[float, float, float]
    outgoing: Tuple[float, float, float]
    surface: str = ""
    line: int = 0

    def __post_init__(self):
        if not self.incoming[1] < 0:
            raise IngestError(f"incoming v_y must be negative, got {self.incoming[1]}")
        if not self.outgoing[1] > 0:
            raise IngestError(f"outgoing v_y must be positive, got {self.outgoing[1]}")

    def nondimensional(self, units: UnitSystem):
        return (
            nondimensionalize_record(*self.incoming, units),
            nondimensionalize_record(*self.outgoing, units),
        )

    def slips(self, units: UnitSystem) -> Tuple[float, float]:
        (xi, _, wi), (xo, _, wo) = self.nondimensional(units)
        return xi + wi, xo + wo


@dataclass(frozen=True)
class IngestResult:
    records: List[MeasurementRecord]
    rejected: List[Tuple[int, str]]
    pairs: np.ndarray  # (H0, HF) per accepted record, nondimensional


def _parse_header(header: Sequence[str]):
    columns = {}
    for pos, name in enumerate(header):
        name = name.strip()
        if name.lower() in _LABEL_COLUMNS:
            columns["surface"] = (pos, None)
            continue
        m = _HEADER_RE.match(name)
        if not m:
            raise IngestError(f"column {name!r} does not declare a unit, e.g. 'vx_in[m/s]'")
        field, unit = m.group(1).lower(), m.group(2).lower()
        if field not in _FIELDS:
            raise IngestError(f"unknown column {field!r}; expected {', '.join(_FIELDS)}")
        table = _SPIN_UNITS if field.startswith("spin") else _VELOCITY_UNITS
        if unit not in table:
            raise IngestError(f"unsupported unit {unit!r} for {field}; use {', '.join(table)}")
        columns[field] = (pos, table[unit])
    missing = [f for f in _FIELDS if f not in columns]
    if missing:
        raise IngestError(f"missing columns: {', '.join(missing)}")
    return columns


def ingest_measurements(source: Union[str, Path, Iterable[str]], units: Optional[UnitSystem] = None) -> IngestResult:
    """Read measured bounces from CSV text, a path, or lines.

    Headers must carry units in brackets; velocities in m/s, spin in rpm or
    rad/s. Rows breaking the in/out sign conventions are rejected with a
    reason instead of aborting the file.
    """
    units = units or UnitSystem()
    if isinstance(source, Path) or (isinstance(source, str) and source and "\n" not in source and Path(source).is_file()):
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = "".join(line if line.endswith("\n") else line + "\n" for line in source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty measurement file") from None
    columns = _parse_header(header)
    records, rejected = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values = {}
            for field in _FIELDS:
                pos, factor = columns[field]
                value = float(row[pos]) * factor
                if not math.isfinite(value):
                    raise IngestError(f"{field} is not finite")
                values[field] = value
            surface = row[columns["surface"][0]].strip() if "surface" in columns else ""
            rec = MeasurementRecord(
                (values["vx_in"], values["vy_in"], values["spin_in"]),
                (values["vx_out"], values["vy_out"], values["spin_out"]),
                surface,
                line_no,
            )
        except (IngestError, ValueError, IndexError) as exc:
            rejected.append((line_no, str(exc) or type(exc).__name__))
            continue
        records.append(rec)
    pairs = np.array([rec.slips(units) for rec in records], dtype=float).reshape(-1, 2)
    return IngestResult(records, rejected, pairs)
