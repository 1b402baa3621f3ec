"""Experiment drivers over initial-condition space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from spinbounce.core import BallState, PhaseTag
from spinbounce.exceptions import BracketError, ConfigurationError, SpinBounceError
from spinbounce.filippov import IntegratorConfig, Trajectory, simulate_bounce
from spinbounce.rigid import RigidParams, rigid_bounce
from spinbounce.surface import KelvinVoigtModel, SurfaceModel, kv_restitution_asymptotic

#: Dimensionless touchdown ranges of the two field campaigns (velocities in
#: ball radii per second, spin in rad/s).
CAMPAIGN_RANGES = {
    "astroturf": {"x_dot": (71.1, 1810.0), "y_dot": (-1710.0, -216.0), "omega": (-477.0, 1090.0)},
    "real-turf": {"x_dot": (0.801, 1720.0), "y_dot": (-1550.0, -101.0), "omega": (-407.0, 1140.0)},
}

#: Contact-time velocity scale used to bring the ranges to order one.
DEFAULT_VELOCITY_SCALE = 1e-3


@dataclass(frozen=True)
class SweepRecord:
    ic: BallState
    H0: float
    HF: float
    phases: tuple
    rolled: bool
    final_state: Optional[BallState] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class ManifoldResult:
    parameter: float
    bracket: tuple
    hf: float
    hf_left: float
    hf_right: float
    iterations: int
    left: Trajectory
    right: Trajectory
    trajectory: Trajectory

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def sign_left(self) -> int:
        return int(math.copysign(1, self.hf_left))

    @property
    def sign_right(self) -> int:
        return int(math.copysign(1, self.hf_right))


def campaign_grid(n: int = 8, campaign: str = "astroturf", velocity_scale: float = DEFAULT_VELOCITY_SCALE) -> List[BallState]:
    """Regular ``n x n x n`` touchdown grid spanning a campaign's ranges."""
    try:
        ranges = CAMPAIGN_RANGES[campaign]
    except KeyError:
        raise ConfigurationError(f"unknown campaign {campaign!r}; choose from {', '.join(CAMPAIGN_RANGES)}") from None
    axes = [np.linspace(*ranges[k], n) * velocity_scale for k in ("x_dot", "y_dot", "omega")]
    return [BallState.touchdown(a, b, c) for a in axes[0] for b in axes[1] for c in axes[2]]


def _as_states(grid) -> List[BallState]:
    if isinstance(grid, np.ndarray):
        arr = np.atleast_2d(np.asarray(grid, dtype=float))
        if arr.shape[1] == 3:
            return [BallState.touchdown(*row) for row in arr.tolist()]
        if arr.shape[1] == 5:
            return [BallState.from_array(row) for row in arr]
        raise ValueError("grid array needs 3 (x_dot, y_dot, omega) or 5 columns")
    return [g if isinstance(g, BallState) else BallState.from_array(g) for g in grid]


def _one(model, ic, config) -> SweepRecord:
    try:
        if not ic.y_dot < 0:
            raise SpinBounceError(f"y_dot must be negative at touchdown, got {ic.y_dot}")
        tr = simulate_bounce(model, ic, config)
    except (SpinBounceError, ValueError, ArithmeticError) as exc:
        return SweepRecord(ic, ic.slip, math.nan, (), False, None, f"{type(exc).__name__}: {exc}")
    phases = tuple(tr.phase_sequence)
    return SweepRecord(ic, ic.slip, tr.final_slip, phases, PhaseTag.ROLL in phases, tr.final_state)


def sweep_ics(model: SurfaceModel, grid, config: Optional[IntegratorConfig] = None, n_jobs: int = 1) -> List[SweepRecord]:
    """One bounce per grid point, in grid order; failures are kept as records."""
    states = _as_states(grid)
    if n_jobs == 1:
        return [_one(model, ic, config) for ic in states]
    return Parallel(n_jobs=n_jobs)(delayed(_one)(model, ic, config) for ic in states)


def omega_family(x_dot0: float, y_dot0: float) -> Callable[[float], BallState]:
    return lambda omega0: BallState.touchdown(x_dot0, y_dot0, omega0)


def coordinate_family(base: BallState, name: str) -> Callable[[float], BallState]:
    if name not in ("x", "x_dot", "y", "y_dot", "omega"):
        raise ValueError(f"unknown coordinate {name!r}")

    def family(value):
        fields = {k: getattr(base, k) for k in ("x", "x_dot", "y", "y_dot", "omega")}
        fields[name] = value
        return BallState(**fields)

    return family


def find_spin_reversal_manifold(
    model: SurfaceModel,
    family: Callable[[float], BallState],
    bracket: Sequence[float],
    tol: float = 1e-9,
    max_iter: int = 60,
    config: Optional[IntegratorConfig] = None,
) -> ManifoldResult:
    """Bisect a one-parameter family of touchdowns for lift-off slip ``H_F = 0``."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise BracketError("bracket must be increasing")

    def run(value):
        return simulate_bounce(model, family(value), config)

    tr_lo, tr_hi = run(lo), run(hi)
    h_lo, h_hi = tr_lo.final_slip, tr_hi.final_slip
    if h_lo == 0.0 or h_hi == 0.0 or (h_lo > 0) == (h_hi > 0):
        raise BracketError(f"lift-off slip does not change sign on [{lo}, {hi}] ({h_lo:.3e}, {h_hi:.3e})")
    iterations = 0
    mid, tr_mid, h_mid = lo, tr_lo, h_lo
    while iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        tr_mid = run(mid)
        h_mid = tr_mid.final_slip
        iterations += 1
        if abs(h_mid) <= tol:
            break
        if (h_mid > 0) == (h_lo > 0):
            lo, tr_lo, h_lo = mid, tr_mid, h_mid
        else:
            hi, tr_hi, h_hi = mid, tr_mid, h_mid
    return ManifoldResult(
        parameter=mid,
        bracket=(lo, hi),
        hf=h_mid,
        hf_left=h_lo,
        hf_right=h_hi,
        iterations=iterations,
        left=tr_lo,
        right=tr_hi,
        trajectory=tr_mid,
    )


@dataclass(frozen=True)
class PerturbationResult:
    a: Trajectory
    b: Trajectory
    c: Trajectory
    delta: float

    def cone_traces(self):
        """``(Lambda_N, Lambda_T)`` sample arrays for A, B and C."""
        return {k: (t.lambda_n, t.lambda_t) for k, t in (("A", self.a), ("B", self.b), ("C", self.c))}


def perturbation_experiment(model: SurfaceModel, p0, delta: float, config: Optional[IntegratorConfig] = None) -> PerturbationResult:
    """Trajectory from ``p0`` and the two with spin shifted by ``+delta`` and ``-delta``."""
    base = p0 if isinstance(p0, BallState) else BallState.from_array(p0)
    shift = BallState(0.0, 0.0, 0.0, 0.0, delta)
    return PerturbationResult(
        a=simulate_bounce(model, base, config),
        b=simulate_bounce(model, base + shift, config),
        c=simulate_bounce(model, base + shift * -1.0, config),
        delta=delta,
    )


@dataclass(frozen=True)
class RigidLimitRow:
    eps2: float
    lift_off: BallState
    rigid: BallState
    restitution: float
    deviation: float


def rigid_limit_study(
    family: Callable[[float], KelvinVoigtModel],
    eps_values: Sequence[float],
    state0: BallState,
    r: Optional[float] = None,
    velocity_scale: float = 1.0,
    config: Optional[IntegratorConfig] = None,
) -> List[RigidLimitRow]:
    """Compare compliant lift-off velocities with the rigid map as ``eps2`` shrinks.

    ``family`` builds the surface for each ``eps2``. The rigid reference uses the
    model's friction coefficient and, unless ``r`` is given, the small-damping
    restitution of the normal dashpot.
    """
    eps_values = list(eps_values)
    if any(e <= 0 for e in eps_values) or any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps_values must be positive and strictly decreasing")
    rows = []
    for eps in eps_values:
        model = family(eps)
        restitution = kv_restitution_asymptotic(model.d2) if r is None else r
        rigid = rigid_bounce(state0, RigidParams(model.mu, restitution)).final_state
        tr = simulate_bounce(model, state0.scale_velocities(velocity_scale), config)
        out = tr.final_state.scale_velocities(1.0 / velocity_scale)
        dev = max(abs(out.x_dot - rigid.x_dot), abs(out.y_dot - rigid.y_dot), abs(out.omega - rigid.omega))
        rows.append(RigidLimitRow(eps, out, rigid, -out.y_dot / state0.y_dot, dev))
    return rows
