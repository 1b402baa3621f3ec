"""Frozen Kelvin-Voigt parameters for the lift-off-rolling perturbation experiment.

Starting from a rolling restitution-phase state, trajectory A must leave the
surface exactly at the two-fold, which fixes one parameter. We hold
``d1, d2, eps2, g, mu`` and solve for ``eta``; :func:`calibrate_eta` re-derives
the stored value.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from spinbounce.filippov import IntegratorConfig, simulate_bounce
from spinbounce.surface import KelvinVoigtModel

ROLL_LIFT_STATE = np.array([0.3543, -0.1603128, -0.1608, 3.4739, 0.1603128])
ROLL_LIFT_MU = 0.3
ROLL_LIFT_D1 = 0.5
ROLL_LIFT_D2 = 0.01
ROLL_LIFT_EPS2 = 0.01
ROLL_LIFT_G = 9.81
ROLL_LIFT_ETA = 0.45788598270976366
ROLL_LIFT_DELTA = 1e-3
ETA_BRACKET = (0.45, 0.47)


def rolling_lift_off_model(eta: float = ROLL_LIFT_ETA) -> KelvinVoigtModel:
    return KelvinVoigtModel(d1=ROLL_LIFT_D1, d2=ROLL_LIFT_D2, eta=eta, eps2=ROLL_LIFT_EPS2, mu=ROLL_LIFT_MU, g=ROLL_LIFT_G)


def calibrate_eta(bracket=ETA_BRACKET, config: IntegratorConfig | None = None, xtol: float = 1e-14) -> float:
    """Root of the lift-off slip of trajectory A as a function of ``eta``."""

    def final_slip(eta):
        return simulate_bounce(rolling_lift_off_model(eta), ROLL_LIFT_STATE, config).final_slip

    return brentq(final_slip, *bracket, xtol=xtol)
