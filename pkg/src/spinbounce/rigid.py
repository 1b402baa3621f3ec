"""Rigid bounce with Coulomb friction, solved in the normal-impulse domain.

With the normal impulse ``n`` as independent variable the contact-point
velocities obey ``dv_N/dn = 1`` and ``dv_T/dn = (7/2) lambda_T / lambda_N``,
so slipping moves ``v_T`` linearly in ``v_N`` with slope ``-/+ (7/2) mu``
and rolling keeps ``v_T`` frozen. Lift-off happens once ``v_N`` reaches
``-r * y_dot0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from spinbounce.core import BallState, slip_velocity
from spinbounce.exceptions import ConfigurationError, NotAnImpactError

SLIP_GAIN = 3.5  # inverse tangential mass at the contact point
VELOCITY_SHARE = 2.0 / 7.0
SPIN_SHARE = 5.0 / 7.0


class RigidCase(str, enum.Enum):
    I_POS = "I+"
    I_NEG = "I-"
    II_POS = "II+"
    II_NEG = "II-"
    III_POS = "III+"
    III_NEG = "III-"
    III = "III"  # rolling already at touchdown

    def __str__(self):
        return self.value

    @property
    def family(self) -> str:
        return self.value.rstrip("+-")


_LABELS = {
    ("I", 1): RigidCase.I_POS,
    ("I", -1): RigidCase.I_NEG,
    ("II", 1): RigidCase.II_POS,
    ("II", -1): RigidCase.II_NEG,
    ("III", 1): RigidCase.III_POS,
    ("III", -1): RigidCase.III_NEG,
    ("III", 0): RigidCase.III,
}


@dataclass(frozen=True)
class RigidParams:
    mu: float
    r: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if not (0 < self.r <= 1):
            raise ConfigurationError(f"r must lie in (0, 1], got {self.r}")


@dataclass(frozen=True)
class RigidOutcome:
    case_label: RigidCase
    initial_state: BallState
    final_state: BallState
    roll_entry_impulse: Optional[float]

    @property
    def final_slip(self) -> float:
        return slip_velocity(self.final_state)


@dataclass(frozen=True)
class ImpulseTrace:
    """Contact-point velocities sampled on a uniform normal-impulse grid."""

    impulse: np.ndarray
    v_t: np.ndarray
    v_n: np.ndarray
    x_dot: np.ndarray
    omega: np.ndarray
    roll_index: Optional[int]
    roll_v_n: Optional[float]
    case_label: RigidCase

    @property
    def samples(self):
        return list(zip(self.v_t.tolist(), self.v_n.tolist()))

    @property
    def roll_entry_impulse(self) -> Optional[float]:
        """Impulse of the first stored rolling sample (accurate to one stride)."""
        if self.roll_index is None:
            return None
        return float(self.impulse[self.roll_index])

    def final_state(self) -> BallState:
        return BallState(0.0, float(self.x_dot[-1]), 0.0, float(self.v_n[-1]), float(self.omega[-1]))


def _check_impact(state0: BallState):
    if not state0.y_dot < 0:
        raise NotAnImpactError(f"impact needs y_dot < 0, got {state0.y_dot}")


def classify_rigid_case(state0: BallState, params: RigidParams) -> RigidCase:
    """Slip-through (I), roll in restitution (II) or roll in compression (III).

    The boundaries ``|H0/y_dot0| = 7/2 mu`` and ``= 7/2 mu (1 + r)`` are
    assigned to III and II respectively.
    """
    _check_impact(state0)
    h0 = slip_velocity(state0)
    if h0 == 0.0:
        return RigidCase.III
    ratio = abs(h0 / state0.y_dot)
    compression = SLIP_GAIN * params.mu
    if ratio <= compression:
        family = "III"
    elif ratio <= compression * (1.0 + params.r):
        family = "II"
    else:
        family = "I"
    return _LABELS[family, int(math.copysign(1, h0))]


def rigid_bounce(state0: BallState, params: RigidParams) -> RigidOutcome:
    case = classify_rigid_case(state0, params)
    h0 = slip_velocity(state0)
    total_impulse = (1.0 + params.r) * -state0.y_dot
    if case.family == "I":
        dv_t = -math.copysign(SLIP_GAIN * params.mu * total_impulse, h0)
        roll_impulse = None
    else:
        dv_t = -h0
        roll_impulse = abs(h0) / (SLIP_GAIN * params.mu)
    final = BallState(
        0.0,
        state0.x_dot + VELOCITY_SHARE * dv_t,
        0.0,
        -params.r * state0.y_dot,
        state0.omega + SPIN_SHARE * dv_t,
    )
    return RigidOutcome(case, state0, final, roll_impulse)


@numba.njit(cache=True)
def _step_impulse_domain(x_dot0, y_dot0, omega0, mu, r, steps, stride):
    dn = (1.0 + r) * -y_dot0 / steps
    n_out = (steps + stride - 1) // stride + 1
    impulse = np.empty(n_out)
    x_dot = np.empty(n_out)
    omega = np.empty(n_out)
    v_n = np.empty(n_out)
    impulse[0] = 0.0
    x_dot[0] = x_dot0
    omega[0] = omega0
    v_n[0] = y_dot0
    roll_step = -1
    roll_v_n = np.nan
    xd = x_dot0
    om = omega0
    if xd + om == 0.0:
        roll_step = 0
        roll_v_n = y_dot0
    out = 1
    for k in range(steps):
        if roll_step < 0:
            # Coulomb slip: lambda_T / lambda_N = -sign(v_T) mu, so d(x_dot)/dn = -/+ mu
            # and d(omega)/dn = 5/2 of that.
            v_t = xd + om
            s = 1.0 if v_t > 0.0 else -1.0
            xd_new = xd - s * mu * dn
            om_new = om - 2.5 * s * mu * dn
            if (xd_new + om_new) * s <= 0.0:
                # stick inside this step: slip only for the fraction that zeroes v_T
                frac = v_t / (3.5 * s * mu * dn)
                xd_new = xd - s * mu * dn * frac
                om_new = -xd_new
                roll_step = k + 1
                roll_v_n = y_dot0 + (k + frac) * dn
            xd = xd_new
            om = om_new
        if (k + 1) % stride == 0 or k + 1 == steps:
            impulse[out] = (k + 1) * dn
            x_dot[out] = xd
            omega[out] = om
            v_n[out] = y_dot0 + (k + 1) * dn
            out += 1
    v_n[out - 1] = -r * y_dot0
    roll_index = -1
    if roll_step >= 0:
        roll_index = (roll_step + stride - 1) // stride
    return impulse[:out], x_dot[:out], omega[:out], v_n[:out], roll_index, roll_v_n


def impulse_trace_oracle(
    state0: BallState, params: RigidParams, steps: int = 100_000, max_samples: int = 100_001
) -> ImpulseTrace:
    """Forward-step the impulse-domain equations on a uniform grid of ``steps`` cells.

    Independent of :func:`rigid_bounce`: it advances ``x_dot`` and ``omega``
    directly from the contact forces and detects roll entry from the sign
    of ``v_T``, instead of using the closed-form case split. At most
    ``max_samples`` evenly strided samples are kept (always including the
    first and last); the stepping itself always uses all ``steps`` cells.
    """
    _check_impact(state0)
    if steps < 10:
        raise ValueError("steps must be at least 10")
    if max_samples < 2:
        raise ValueError("max_samples must be at least 2")
    stride = max(1, -(-int(steps) // (int(max_samples) - 1)))
    impulse, x_dot, omega, v_n, roll_index, roll_v_n = _step_impulse_domain(
        state0.x_dot, state0.y_dot, state0.omega, params.mu, params.r, int(steps), stride
    )
    h0 = slip_velocity(state0)
    if roll_index < 0:
        family = "I"
        roll_index = None
        roll_v_n = None
    else:
        family = "III" if roll_v_n <= 0.0 else "II"
        roll_v_n = float(roll_v_n)
    sign = 0 if h0 == 0.0 else int(math.copysign(1, h0))
    return ImpulseTrace(
        impulse=impulse,
        v_t=x_dot + omega,
        v_n=v_n,
        x_dot=x_dot,
        omega=omega,
        roll_index=roll_index,
        roll_v_n=roll_v_n,
        case_label=_LABELS[family, sign],
    )


def kinetic_energy(state: BallState) -> float:
    return 0.5 * (state.x_dot**2 + state.y_dot**2) + 0.2 * state.omega**2
