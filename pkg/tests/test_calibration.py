import pytest

from spinbounce.calibration import ROLL_LIFT_DELTA, ROLL_LIFT_ETA, ROLL_LIFT_STATE, calibrate_eta, rolling_lift_off_model
from spinbounce.core import PhaseTag
from spinbounce.filippov import simulate_bounce
from spinbounce.sweep import perturbation_experiment


def test_frozen_eta_is_reproducible():
    assert calibrate_eta() == pytest.approx(ROLL_LIFT_ETA, abs=1e-12)


def test_nominal_trajectory_leaves_at_the_two_fold():
    tr = simulate_bounce(rolling_lift_off_model(), ROLL_LIFT_STATE)
    assert abs(tr.final_slip) < 1e-6
    assert tr.phases[0] is PhaseTag.ROLL


def test_slip_is_quadratic_in_eta_offset():
    # lift-off slip of A is tangent to zero at the calibrated value
    h = [simulate_bounce(rolling_lift_off_model(ROLL_LIFT_ETA + d), ROLL_LIFT_STATE).final_slip for d in (1e-3, 2e-3)]
    assert h[1] / h[0] == pytest.approx(4.0, rel=0.2)


def test_perturbed_trajectories_split():
    res = perturbation_experiment(rolling_lift_off_model(), ROLL_LIFT_STATE, ROLL_LIFT_DELTA)
    assert res.b.final_slip > 0 > res.c.final_slip
    assert res.b.phase_sequence[-1] is PhaseTag.SLIP_POSITIVE
    assert res.c.phase_sequence[-1] is PhaseTag.SLIP_NEGATIVE
