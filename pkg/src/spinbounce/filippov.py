"""Event-driven integration of the piecewise-smooth bounce.

The contact phase is a Filippov system on the switching surface ``H = 0``:
``F1`` drives forward slip, ``F2`` backward slip, and rolling follows the
sliding field ``Fs = (1 - alpha) F1 + alpha F2`` that keeps ``H' = 0``.
Between events an adaptive embedded Runge-Kutta stepper advances the active
field; events are bracketed on accepted steps and refined by bisection on
the stepper's dense output.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

import numpy as np
from scipy import integrate

from spinbounce.core import BallState, PhaseTag
from spinbounce.exceptions import (
    IntegrationError,
    MaxStepsExceeded,
    NotInContactError,
    SingularAlphaError,
)
from spinbounce.surface import GRAD_H, SurfaceModel, X, XD, Y, YD, W, as_vector

log = logging.getLogger(__name__)

SLIP_GAIN = 3.5


class EventKind(str, enum.Enum):
    TOUCHDOWN = "touchdown"
    ROLL_ENTRY = "roll-entry"
    ROLL_EXIT = "roll-exit"
    CROSSING = "crossing"  # H changes sign without sticking
    LIFT_OFF = "lift-off"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Event:
    kind: EventKind
    tau: float
    state: BallState
    into: Optional[PhaseTag] = None
    degenerate: bool = False

    @property
    def regime(self) -> Optional[PhaseTag]:
        """Contact regime at lift-off (``into`` doubles as the lift-off regime)."""
        return self.into if self.kind is EventKind.LIFT_OFF else None


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    event_tol: float = 1e-10
    sliding_tol: float = 1e-8
    max_steps: int = 200_000
    max_tau: float = 1e4
    max_step: float = math.inf
    method: str = "DOP853"

    def __post_init__(self):
        for name in ("rtol", "atol", "event_tol", "sliding_tol", "max_tau", "max_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IntegratorConfig.{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("IntegratorConfig.max_steps must be at least 1")
        if self.method not in ("DOP853", "RK45"):
            raise ValueError(f"unsupported method {self.method!r}")


@dataclass
class Trajectory:
    tau: np.ndarray
    states: np.ndarray
    phases: List[PhaseTag]
    lambda_n: np.ndarray
    lambda_t: np.ndarray
    events: List[Event] = field(default_factory=list)

    def __len__(self):
        return len(self.tau)

    def samples(self) -> Iterator[tuple]:
        for i in range(len(self.tau)):
            yield (
                float(self.tau[i]),
                BallState.from_array(self.states[i]),
                self.phases[i],
                float(self.lambda_n[i]),
                float(self.lambda_t[i]),
            )

    @property
    def slip(self) -> np.ndarray:
        return self.states[:, XD] + self.states[:, W]

    @property
    def final_state(self) -> BallState:
        return BallState.from_array(self.states[-1])

    @property
    def lift_off(self) -> Event:
        return self.events[-1]

    @property
    def initial_slip(self) -> float:
        return float(self.slip[0])

    @property
    def final_slip(self) -> float:
        return float(self.slip[-1])

    @property
    def phase_sequence(self) -> List[PhaseTag]:
        seq = []
        for ph in self.phases:
            if not seq or seq[-1] is not ph:
                seq.append(ph)
        return seq

    @property
    def rolled(self) -> bool:
        return PhaseTag.ROLL in self.phases

    def events_of(self, kind: EventKind) -> List[Event]:
        return [e for e in self.events if e.kind is kind]


# --- sliding quantities --------------------------------------------------------


def _slip_rate(model: SurfaceModel, p, h_sign: float) -> float:
    """``(F_i . grad) H`` for slip sign ``h_sign`` (+1 gives F1, -1 gives F2)."""
    return model.tangential_load(p) - SLIP_GAIN * h_sign * model.mu * model.normal_force(p)


def sliding_alpha(model: SurfaceModel, state) -> float:
    """Convex weight that makes ``(1 - alpha) F1 + alpha F2`` tangent to ``H = 0``.

    Raises SingularAlphaError where ``F1`` and ``F2`` agree along ``grad H``
    (zero normal force or zero friction).
    """
    p = as_vector(state)
    f1, f2 = model.fields(p)
    num = float(f1 @ GRAD_H)
    den = float((f1 - f2) @ GRAD_H)
    if den == 0.0:
        raise SingularAlphaError(f"alpha undefined: (F1 - F2).grad H = 0 at {p.tolist()}")
    return num / den


def sliding_field(model: SurfaceModel, state) -> np.ndarray:
    p = as_vector(state)
    alpha = sliding_alpha(model, p)
    f1, f2 = model.fields(p)
    return (1.0 - alpha) * f1 + alpha * f2


def _rolling_field(model: SurfaceModel, p) -> np.ndarray:
    try:
        return sliding_field(model, p)
    except SingularAlphaError:
        # F1 and F2 coincide here, so either one is the sliding field
        return model.field(p, 1.0)


def mixed_slip_derivative(model: SurfaceModel, state, outer: int, inner: int) -> float:
    """``(F_outer . grad)(F_inner . grad) H`` with field indices 1 or 2."""
    p = as_vector(state)
    s_outer = 1.0 if outer == 1 else -1.0
    s_inner = 1.0 if inner == 1 else -1.0
    grad = model.grad_tangential_load(p) - SLIP_GAIN * s_inner * model.mu * model.grad_normal_force(p)
    return float(model.field(p, s_outer) @ grad)


def directional_derivatives(model: SurfaceModel, state, which: int):
    """First and second derivatives of ``H`` along ``F1`` (``which=1``) or ``F2``."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    p = as_vector(state)
    s = 1.0 if which == 1 else -1.0
    return _slip_rate(model, p, s), mixed_slip_derivative(model, p, which, which)


# --- integration ---------------------------------------------------------------


def _lambda_t(model, p, phase):
    lam_n = model.normal_force(p)
    if phase is PhaseTag.SLIP_POSITIVE:
        return -model.mu * lam_n
    if phase is PhaseTag.SLIP_NEGATIVE:
        return model.mu * lam_n
    return 0.4 * float(_rolling_field(model, p)[W])


class _Recorder:
    def __init__(self, model):
        self.model = model
        self.tau, self.states, self.phases, self.lam_n, self.lam_t = [], [], [], [], []
        self.events = []

    def sample(self, tau, p, phase):
        self.tau.append(float(tau))
        self.states.append(np.array(p, dtype=float))
        self.phases.append(phase)
        self.lam_n.append(self.model.normal_force(p))
        self.lam_t.append(_lambda_t(self.model, p, phase))

    def event(self, kind, tau, p, into=None, degenerate=False):
        self.events.append(Event(kind, float(tau), BallState.from_array(p), into, degenerate))

    def build(self) -> Trajectory:
        return Trajectory(
            tau=np.array(self.tau),
            states=np.array(self.states),
            phases=self.phases,
            lambda_n=np.array(self.lam_n),
            lambda_t=np.array(self.lam_t),
            events=self.events,
        )


def _stick(p):
    """Remove residual slip with the tangential impulse split 2/7 : 5/7."""
    p = np.array(p, dtype=float)
    h = p[XD] + p[W]
    p[XD] -= h * 2.0 / 7.0
    p[W] = -p[XD]
    return p


def _surface_phase(model, p) -> PhaseTag:
    """Regime selected at a point of the switching surface."""
    g1 = _slip_rate(model, p, 1.0)
    g2 = _slip_rate(model, p, -1.0)
    if g1 == 0.0 and g2 == 0.0:
        # both fields tangent (zero normal force and load): decide a little way along the flow
        q = p + 1e-7 * model.field(p, 1.0)
        g1 = _slip_rate(model, q, 1.0)
        g2 = _slip_rate(model, q, -1.0)
    if g1 < 0.0 < g2:
        return PhaseTag.ROLL
    if g2 <= 0.0 and g1 <= 0.0 and (g1 < 0.0 or g2 < 0.0):
        return PhaseTag.SLIP_NEGATIVE
    return PhaseTag.SLIP_POSITIVE


class _Segment:
    """One smooth phase: right-hand side and signed event functions.

    Every event function is positive inside the phase and reaches zero at
    the event. Roll segments integrate ``[X, X', Y, Y']`` with ``Omega = -X'``.
    """

    def __init__(self, model, phase):
        self.model = model
        self.phase = phase

    def embed(self, y):
        if self.phase is PhaseTag.ROLL:
            return np.array([y[0], y[1], y[2], y[3], -y[1]])
        return np.asarray(y, dtype=float)

    def reduce(self, p):
        return np.array(p[:4]) if self.phase is PhaseTag.ROLL else np.array(p, dtype=float)

    def rhs(self, t, y):
        p = self.embed(y)
        if self.phase is PhaseTag.ROLL:
            return _rolling_field(self.model, p)[:4]
        return self.model.field(p, 1.0 if self.phase is PhaseTag.SLIP_POSITIVE else -1.0)

    def event_values(self, p):
        m = self.model
        values = {"lift": m.normal_force(p)}
        if self.phase is PhaseTag.SLIP_POSITIVE:
            values["slip"] = p[XD] + p[W]
        elif self.phase is PhaseTag.SLIP_NEGATIVE:
            values["slip"] = -(p[XD] + p[W])
        else:
            values["exit1"] = -_slip_rate(m, p, 1.0)
            values["exit2"] = _slip_rate(m, p, -1.0)
        return values


def _bisect(fun, ta, tb, tol):
    """Locate the first zero of ``fun`` in ``(ta, tb]`` given fun(ta) > 0 >= fun(tb)."""
    fb = fun(tb)
    for _ in range(200):
        if -tol <= fb <= 0.0 or tb - ta <= 4.0 * np.finfo(float).eps * max(1.0, abs(tb)):
            break
        tm = 0.5 * (ta + tb)
        fm = fun(tm)
        if fm > 0.0:
            ta = tm
        else:
            tb, fb = tm, fm
    return tb


def simulate_bounce(model: SurfaceModel, state0, config: Optional[IntegratorConfig] = None) -> Trajectory:
    """Integrate one contact interval from ``state0`` until lift-off.

    ``state0`` is in contact-time units (velocities per unit ``tau``). The
    returned trajectory always starts with a touchdown event and ends with
    a lift-off event; lift-off while rolling is flagged ``degenerate``.
    """
    cfg = config or IntegratorConfig()
    p = as_vector(state0).astype(float)
    if p.shape != (5,) or not np.all(np.isfinite(p)):
        raise ValueError("state0 must be a finite 5-vector")
    if p[Y] > cfg.event_tol:
        raise NotInContactError(f"ball is above the surface (y = {p[Y]})")
    lam0 = model.normal_force(p)
    if lam0 < -cfg.event_tol:
        raise NotInContactError(f"normal force is negative at the initial state ({lam0:.6g})")

    rec = _Recorder(model)
    tau = 0.0
    if abs(p[XD] + p[W]) <= cfg.sliding_tol:
        phase = _surface_phase(model, p)
        if phase is PhaseTag.ROLL:
            p = _stick(p)
    else:
        phase = PhaseTag.SLIP_POSITIVE if p[XD] + p[W] > 0 else PhaseTag.SLIP_NEGATIVE
    rec.event(EventKind.TOUCHDOWN, tau, p)
    rec.sample(tau, p, phase)
    steps = 0
    solver_cls = integrate.DOP853 if cfg.method == "DOP853" else integrate.RK45

    while True:
        seg = _Segment(model, phase)
        solver = solver_cls(
            seg.rhs,
            tau,
            seg.reduce(p),
            t_bound=cfg.max_tau,
            rtol=cfg.rtol,
            atol=cfg.atol,
            max_step=cfg.max_step,
        )
        old = seg.event_values(p)
        # a function that starts on its boundary is armed once it turns positive
        armed = {k: (v > 0.0) for k, v in old.items()}
        if old["lift"] <= 0.0:
            # touching the lift-off boundary and not pushed back into contact
            probe = p + 1e-9 * seg.embed(seg.rhs(tau, seg.reduce(p)))
            if model.normal_force(probe) <= 0.0:
                rec.event(EventKind.LIFT_OFF, tau, p, into=phase, degenerate=phase is PhaseTag.ROLL)
                return rec.build()
        transition = None
        while transition is None:
            if steps >= cfg.max_steps:
                raise MaxStepsExceeded(f"no lift-off within {cfg.max_steps} steps")
            message = solver.step()
            steps += 1
            if solver.status == "failed":
                raise IntegrationError(f"stepper failed: {message}")
            t_old, t_new = solver.t_old, solver.t
            p_new = seg.embed(solver.y)
            new = seg.event_values(p_new)
            crossings = {}
            dense = None
            for key, value in new.items():
                if not armed.get(key, False):
                    if value > 0.0:
                        armed[key] = True
                    elif key != "lift" and value < -cfg.event_tol:
                        raise IntegrationError(
                            f"inconsistent transition: {key} left the {phase} region at tau={t_new}"
                        )
                    elif key == "lift" and value < 0.0:
                        dense = dense or solver.dense_output()
                        crossings[key] = t_old
                    continue
                if value <= 0.0:
                    dense = dense or solver.dense_output()
                    fun = lambda t, key=key: seg.event_values(seg.embed(dense(t)))[key]
                    crossings[key] = _bisect(fun, t_old, t_new, cfg.event_tol)
            if crossings:
                # a function may dip below zero and recover inside one step (friction
                # flips sign past lift-off), so recheck everything at the earliest root
                changed = True
                while changed:
                    changed = False
                    t_min = min(crossings.values())
                    values = seg.event_values(seg.embed(dense(t_min)))
                    for key, value in values.items():
                        if key not in crossings and armed.get(key, False) and value <= 0.0:
                            fun = lambda t, key=key: seg.event_values(seg.embed(dense(t)))[key]
                            crossings[key] = _bisect(fun, t_old, t_min, cfg.event_tol)
                            changed = True
            if not crossings:
                tau, p = t_new, p_new
                rec.sample(tau, p, phase)
                if solver.status == "finished":
                    raise IntegrationError(f"no lift-off before tau = {cfg.max_tau}")
                continue
            transition = _resolve(seg, crossings, dense.__call__ if dense else None, cfg)
        kind, t_event, p_event = transition
        tau = t_event
        p = p_event
        rec.sample(tau, p, phase)
        if kind == "lift":
            rec.event(EventKind.LIFT_OFF, tau, p, into=phase, degenerate=phase is PhaseTag.ROLL)
            return rec.build()
        if kind == "slip":
            p = _stick(p)
            new_phase = _surface_phase(model, p)
            if new_phase is phase:
                pass  # grazing contact with the surface; keep slipping
            elif new_phase is PhaseTag.ROLL:
                rec.event(EventKind.ROLL_ENTRY, tau, p)
            else:
                rec.event(EventKind.CROSSING, tau, p, into=new_phase)
            phase = new_phase
        else:
            phase = PhaseTag.SLIP_POSITIVE if kind == "exit1" else PhaseTag.SLIP_NEGATIVE
            rec.event(EventKind.ROLL_EXIT, tau, p, into=phase)
        rec.sample(tau, p, phase)


def _resolve(seg, crossings, dense, cfg):
    """Pick the event that happens first; lift-off wins ties."""
    model = seg.model
    first_key = min(crossings, key=lambda k: (crossings[k], k != "lift"))
    t_first = crossings[first_key]
    p_first = seg.embed(dense(t_first)) if dense is not None else None
    if first_key != "lift" and "lift" in crossings:
        if crossings["lift"] <= t_first:
            first_key = "lift"
    if first_key != "lift" and p_first is not None and model.normal_force(p_first) <= cfg.event_tol:
        # the roll exit or slip reversal coincides with lift-off within tolerance
        first_key = "lift"
    if first_key == "lift":
        t_first = crossings.get("lift", t_first)
        if dense is None:
            raise IntegrationError("lift-off at segment start without dense output")
        p_first = seg.embed(dense(t_first))
    return first_key, t_first, p_first
