"""State, phase and unit-convention types shared by every module.

Lengths are measured in ball radii and the ball has unit mass, so the
moment of inertia is 2/5 and only the constants 7/2 and 5/2 survive in
the dynamics. Positive ``omega`` is backspin (counter-clockwise).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from spinbounce.exceptions import ConfigurationError

#: Ball radius (m) that reproduces the dimensionless ranges of the golf data.
DEFAULT_BALL_RADIUS = 0.0215

RPM_TO_RAD_PER_S = 2.0 * math.pi / 60.0


class PhaseTag(str, enum.Enum):
    AIRBORNE = "airborne"
    SLIP_POSITIVE = "slip+"
    SLIP_NEGATIVE = "slip-"
    ROLL = "roll"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BallState:
    """Planar state ``[x, x_dot, y, y_dot, omega]`` of the ball centre."""

    x: float
    x_dot: float
    y: float
    y_dot: float
    omega: float

    def __post_init__(self):
        for name in ("x", "x_dot", "y", "y_dot", "omega"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"BallState.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_array(cls, p) -> BallState:
        p = np.asarray(p, dtype=float)
        if p.shape != (5,):
            raise ValueError(f"expected a 5-vector, got shape {p.shape}")
        return cls(*p.tolist())

    @classmethod
    def touchdown(cls, x_dot: float, y_dot: float, omega: float) -> BallState:
        return cls(0.0, x_dot, 0.0, y_dot, omega)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.y, self.y_dot, self.omega])

    def __add__(self, other: BallState) -> BallState:
        return BallState.from_array(self.as_array() + other.as_array())

    def __mul__(self, factor: float) -> BallState:
        return BallState.from_array(self.as_array() * factor)

    __rmul__ = __mul__

    def scale_velocities(self, factor: float) -> BallState:
        """Change the time unit: velocities and spin are multiplied by ``factor``."""
        return BallState(
            self.x, self.x_dot * factor, self.y, self.y_dot * factor, self.omega * factor
        )

    @property
    def slip(self) -> float:
        return slip_velocity(self)


def slip_velocity(state: BallState) -> float:
    """Tangential velocity of the contact point, ``x_dot + omega``."""
    return state.x_dot + state.omega


@dataclass(frozen=True)
class UnitSystem:
    ball_radius: float = DEFAULT_BALL_RADIUS
    time_unit: float = 1.0

    def __post_init__(self):
        if not (self.ball_radius > 0 and math.isfinite(self.ball_radius)):
            raise ConfigurationError(f"ball_radius must be positive, got {self.ball_radius}")
        if not (self.time_unit > 0 and math.isfinite(self.time_unit)):
            raise ConfigurationError(f"time_unit must be positive, got {self.time_unit}")

    @property
    def velocity_scale(self) -> float:
        """One dimensionless velocity unit in m/s."""
        return self.ball_radius / self.time_unit

    @property
    def gravity(self) -> float:
        """Standard gravity in radii per squared time unit."""
        return 9.80665 * self.time_unit**2 / self.ball_radius


def nondimensionalize_record(v_x: float, v_y: float, spin_rpm: float, units: UnitSystem):
    """Convert a measured (m/s, m/s, rpm) triple to ``(x_dot, y_dot, omega)``."""
    if not isinstance(units, UnitSystem):
        raise ConfigurationError("units must be a UnitSystem")
    scale = units.velocity_scale
    omega = spin_rpm * RPM_TO_RAD_PER_S * units.time_unit
    return v_x / scale, v_y / scale, omega


def dimensionalize_record(x_dot: float, y_dot: float, omega: float, units: UnitSystem):
    """Inverse of :func:`nondimensionalize_record`."""
    scale = units.velocity_scale
    return x_dot * scale, y_dot * scale, omega / (RPM_TO_RAD_PER_S * units.time_unit)
