"""Bounce of a rigid spinning sphere on a compliant frictional surface."""

from spinbounce.core import BallState, PhaseTag, UnitSystem, slip_velocity
from spinbounce.rigid import RigidParams, classify_rigid_case, rigid_bounce
from spinbounce.surface import GenericModel, KelvinVoigtModel, make_model
from spinbounce.filippov import IntegratorConfig, simulate_bounce
from spinbounce.singularity import locate_two_fold, two_fold_report
from spinbounce.estimators import CompliantBounce, RigidBounce

__all__ = [
    "BallState",
    "PhaseTag",
    "UnitSystem",
    "slip_velocity",
    "RigidParams",
    "classify_rigid_case",
    "rigid_bounce",
    "GenericModel",
    "KelvinVoigtModel",
    "make_model",
    "IntegratorConfig",
    "simulate_bounce",
    "locate_two_fold",
    "two_fold_report",
    "CompliantBounce",
    "RigidBounce",
]

__version__ = "0.1.0"
