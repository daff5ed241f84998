import numpy as np
import pytest

from sharpturn import classical
from sharpturn.classical import (
    LaunchSpec,
    Outcome,
    Region,
    first_contact,
    oracle_boundary,
    propagate_sharp,
    propagate_smooth,
    touching_phase,
)
from sharpturn.errors import NonSharp, SharpModel
from sharpturn.geometry import ModelParams, frames
from sharpturn.two_turn_boundary import critical_boundary

BETA = np.pi / 3
ALPHA = np.pi / 30
ONE = ModelParams.one_turn(BETA)
TWO = ModelParams(beta=BETA, alpha=ALPHA)


def test_launch_validation():
    for kw in ({"energy": 0, "excitation": 0}, {"energy": 1, "excitation": 2},
               {"energy": 1, "excitation": 0.1, "start_x": -1}):
        with pytest.raises(ValueError):
            LaunchSpec(**kw)


def test_first_contact_simple():
    # g = -1 + t crosses at t = 1 with slope 1
    t, tang, margin = first_contact(-1.0, 1.0, 0.0, 0.0, 1.0, 10.0, 1e-6)
    assert t[0] == pytest.approx(1.0, abs=1e-14)
    assert not tang[0]
    assert margin[0] == -np.inf


def test_first_contact_margin_before_crossing():
    # g = -2.5 + 0.1 t + 2 cos t: first local max at t = pi - ... stays below 0
    A, B, C, D = -2.5, 0.1, 2.0, 0.0
    t, _, margin = first_contact(A, B, C, D, 1.0, 100.0)
    ts = np.linspace(0, t[0], 200001)[1:-1]
    g = A + B * ts + C * np.cos(ts)
    assert np.all(g < 0)
    assert A + B * t[0] + C * np.cos(t[0]) == pytest.approx(0, abs=1e-12)
    assert margin[0] < 0


@pytest.mark.parametrize("phase", np.linspace(0, 2 * np.pi, 16, endpoint=False))
def test_below_critical_always_transmitted(phase):
    out = propagate_sharp(ONE, LaunchSpec(1.0, 0.1, phase))
    assert out.kind is Outcome.TRANSMITTED
    assert out.final_state.region is Region.FINAL


def test_above_critical_reflection_exists():
    margin, phase = touching_phase(ONE, 1.0, 0.5, 10_000)
    assert margin >= -1e-10
    out = propagate_sharp(ONE, LaunchSpec(1.0, 0.5, phase))
    assert out.kind is Outcome.REFLECTED
    # the final state is the time-reversed launch
    pos, vel = LaunchSpec(1.0, 0.5, phase).state()
    assert np.allclose(out.final_state.position, pos)
    assert np.allclose(out.final_state.velocity, -vel)


def test_phase_grid_mostly_transmits_above_critical():
    kinds = [propagate_sharp(ONE, LaunchSpec(1.0, 0.5, ph)).kind
             for ph in np.linspace(0, 2 * np.pi, 40, endpoint=False)]
    assert Outcome.TRANSMITTED in kinds


def test_critical_trajectory_touches_at_corner():
    cb, sb = np.cos(BETA), np.sin(BETA)
    start = -5.0
    t0 = start / (np.sqrt(2) * sb)
    launch = LaunchSpec(1.0, cb**2, phase=t0 % (2 * np.pi), start_x=start)
    out = propagate_sharp(ONE, launch)
    assert out.kind is Outcome.REFLECTED
    t_touch, pos = out.touch_events[-1]
    # xi ~ t**3 near this touch, so its time is fixed only to ~eps**(1/3)
    assert t_touch == pytest.approx(-t0, abs=1e-4)
    _, _, xi, eta = frames(ONE, pos[0], pos[1])
    assert abs(xi) < 1e-9 and abs(eta) < 1e-4


def test_sharp_rejects_smooth():
    with pytest.raises(NonSharp):
        propagate_sharp(ModelParams.one_turn(BETA, b=0.01), LaunchSpec(1.0, 0.1))
    with pytest.raises(NonSharp):
        oracle_boundary(ModelParams.one_turn(BETA, b=0.01), 1.0)


def test_two_turn_low_excitation_transmits():
    out = propagate_sharp(TWO, LaunchSpec(0.05, 0.0, 0.0))
    assert out.kind is Outcome.TRANSMITTED
    assert len(out.touch_events) == 2          # crossed both lines


def test_one_turn_oracle_is_nu_critical():
    tol = 1e-7
    assert oracle_boundary(ONE, 1.0, 2000, tol) == pytest.approx(0.25, abs=2 * tol)
    assert oracle_boundary(ONE, 0.3, 2000, tol) == pytest.approx(0.075, abs=2 * tol)


def test_two_turn_oracle_matches_boundary():
    E = 0.05
    tol = 1e-6 * E
    oracle = oracle_boundary(TWO, E, 2000, tol)
    analytic, label = critical_boundary(TWO, E)
    assert label == "Global"
    assert abs(oracle - analytic) <= max(1e-3 * E, 2 * tol)


def test_reflection_monotone_in_excitation():
    E = 0.01
    n_cr = oracle_boundary(TWO, E, 2000, 1e-7)
    for N in (0.8 * n_cr, 0.95 * n_cr):
        assert not classical.reflection_exists(TWO, E, N)
    for N in (1.05 * n_cr, 1.3 * n_cr):
        assert classical.reflection_exists(TWO, E, N)


def test_smooth_requires_width():
    with pytest.raises(SharpModel):
        propagate_smooth(ONE, LaunchSpec(1.0, 0.0))


def test_smooth_ground_state_transmits():
    p = ModelParams.one_turn(BETA, b=0.01)
    out = propagate_smooth(p, LaunchSpec(1.0, 0.0))
    assert out.kind is Outcome.TRANSMITTED
    assert out.energy_drift <= 1e-8
    assert len(out.touch_events) == 1


def test_smooth_follows_free_motion_before_turn():
    b = 0.01
    p = ModelParams.one_turn(BETA, b=b)
    launch = LaunchSpec(1.0, 0.1, 0.3)
    out = propagate_smooth(p, launch)
    sol = out.trajectory
    amp, p0 = np.sqrt(0.2), np.sqrt(1.8)
    t = np.linspace(0, 2.5, 400)
    u = sol(t)
    _, _, xi, _ = frames(p, u[0], u[1])
    assert np.all(xi < -20 * b)
    assert np.max(np.abs(u[0] - (launch.start_x + p0 * t))) < 1e-4
    assert np.max(np.abs(u[1] - amp * np.sin(t + 0.3))) < 1e-4


def test_smooth_two_turn_energy():
    p = ModelParams(beta=BETA, alpha=ALPHA, b=0.01)
    out = propagate_smooth(p, LaunchSpec(0.05, 0.0, 0.0))
    assert out.kind is Outcome.TRANSMITTED
    assert out.energy_drift <= 1e-8
