import numpy as np
import pytest

from spinbounce.core import BallState, PhaseTag
from spinbounce.exceptions import BracketError
from spinbounce.filippov import EventKind, simulate_bounce
from spinbounce.surface import KelvinVoigtModel
from spinbounce.sweep import (
    CAMPAIGN_RANGES,
    coordinate_family,
    find_spin_reversal_manifold,
    omega_family,
    perturbation_experiment,
    rigid_limit_study,
    sweep_ics,
    campaign_grid,
)

KV = KelvinVoigtModel(d1=0.2, d2=0.2, eta=0.1, eps2=1e-3, mu=0.4, g=0.0)
SCATTER = KelvinVoigtModel(d1=0.2, d2=0.2, eta=0.1, eps2=1e-3, mu=0.4, g=456.0)


def test_campaign_grid_spans_ranges():
    grid = campaign_grid(3, "real-turf", velocity_scale=1.0)
    assert len(grid) == 27
    r = CAMPAIGN_RANGES["real-turf"]
    assert min(s.x_dot for s in grid) == r["x_dot"][0]
    assert max(s.omega for s in grid) == r["omega"][1]
    assert all(s.x == s.y == 0 for s in grid)
    with pytest.raises(ValueError):
        campaign_grid(3, "clay")


def test_sweep_records_errors_per_point():
    grid = [BallState.touchdown(0.3, -1, 1.0), BallState(0, 0.3, 0.5, -1, 0)]
    ok, bad = sweep_ics(KV, grid)
    assert ok.ok and ok.rolled and ok.H0 == pytest.approx(1.3)
    assert not bad.ok and "above the surface" in bad.error
    assert ok.phases[0] is PhaseTag.SLIP_POSITIVE


def test_sweep_parallel_matches_serial():
    grid = np.array([[0.3, -1.0, w] for w in np.linspace(-1, 2, 6)])
    a = sweep_ics(KV, grid)
    b = sweep_ics(KV, grid, n_jobs=2)
    assert [r.HF for r in a] == [r.HF for r in b]


def test_families():
    assert omega_family(0.3, -1.0)(0.7) == BallState.touchdown(0.3, -1.0, 0.7)
    fam = coordinate_family(BallState.touchdown(0.3, -1.0, 0.7), "x_dot")
    assert fam(2.0).x_dot == 2.0 and fam(2.0).omega == 0.7
    with pytest.raises(ValueError):
        coordinate_family(BallState.touchdown(0.3, -1.0, 0.7), "spin")


def test_manifold_bracket_checks():
    with pytest.raises(BracketError):
        find_spin_reversal_manifold(KV, omega_family(0.3, -1.0), (1.5, 0.5))
    with pytest.raises(BracketError):
        find_spin_reversal_manifold(KV, omega_family(0.3, -1.0), (1.0, 1.5))


def test_manifold_respects_budget():
    res = find_spin_reversal_manifold(KV, omega_family(0.3, -1.0), (0.5, 1.5), tol=1e-30, max_iter=5)
    assert res.iterations == 5
    assert res.width == pytest.approx(1.0 / 32)
    assert res.sign_left != res.sign_right


def test_slip_reversal_without_rolling_exists():
    # A thin band of touchdowns crosses H = 0 from slip+ straight into slip-:
    # the crossing happens where F1 . grad H < 0 and F2 . grad H < 0.
    tr = simulate_bounce(SCATTER, BallState.touchdown(0.792145056444576, -0.6126815437476385, 0.6373608898099381))
    assert tr.phase_sequence == [PhaseTag.SLIP_POSITIVE, PhaseTag.SLIP_NEGATIVE]
    assert len(tr.events_of(EventKind.CROSSING)) == 1
    assert not tr.rolled and tr.final_slip < 0


def test_perturbation_experiment_shapes():
    res = perturbation_experiment(KV, BallState.touchdown(0.3, -1.0, 0.8348), 1e-2)
    assert res.b.initial_slip - res.a.initial_slip == pytest.approx(1e-2)
    assert res.c.initial_slip - res.a.initial_slip == pytest.approx(-1e-2)
    traces = res.cone_traces()
    assert set(traces) == {"A", "B", "C"}
    lam_n, lam_t = traces["A"]
    # rolling friction reaches the cone edge only at roll exit, up to event tolerance
    assert np.all(np.abs(lam_t) <= KV.mu * np.abs(lam_n) + 1e-9)


def test_rigid_limit_converges():
    family = lambda e: KelvinVoigtModel(d1=0.2, d2=0.2, eta=e, eps2=e, mu=0.3)
    rows = rigid_limit_study(family, [1e-1, 1e-2, 1e-3], BallState.touchdown(10, -2, 0))
    devs = [r.deviation for r in rows]
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 0.02
    assert all(r.restitution == pytest.approx(0.5717400276, abs=1e-8) for r in rows)
    with pytest.raises(ValueError):
        rigid_limit_study(family, [1e-3, 1e-2], BallState.touchdown(10, -2, 0))
