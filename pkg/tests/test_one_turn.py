import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpturn.errors import OutOfDomain
from sharpturn.one_turn import (
    critical_trajectory,
    matching_trajectory,
    nu_critical,
    solve_matching,
    suppression,
    suppression_closed_form,
)

BETA = np.pi / 3
F0_EXACT = 2 * np.log(3) - 2


def test_nu_critical():
    assert nu_critical(BETA) == pytest.approx(0.25, abs=1e-15)
    assert nu_critical(np.pi / 4) == pytest.approx(0.5, abs=1e-15)
    assert nu_critical(np.pi / 2 - 1e-9) < 1e-17


def test_f_at_zero():
    assert suppression_closed_form(BETA, 0.0) == pytest.approx(0.1972246, abs=1e-7)
    assert suppression_closed_form(BETA, 0.0) == pytest.approx(F0_EXACT, abs=1e-14)


def test_f_vanishes_at_critical_nu():
    assert suppression_closed_form(BETA, 0.25) == pytest.approx(0, abs=1e-15)
    sol = solve_matching(BETA, nu_critical(BETA))
    assert (sol.T1, sol.T, sol.theta, sol.f) == (0, 0, 0, 0)
    # float 0.25 lies a rounding step inside; T1 goes like sqrt(nu_cr - nu)
    near = solve_matching(BETA, 0.25)
    assert abs(near.T1) < 1e-7 and abs(near.f) < 1e-15


def test_matching_at_zero_nu():
    sol = solve_matching(BETA, 0.0)
    assert sol.T1 == pytest.approx(-1.0986123, abs=1e-7)
    assert sol.T1 == pytest.approx(-np.log(3), abs=1e-14)
    assert sol.T == pytest.approx(2 * (sol.T1 + 1), abs=1e-14)
    assert sol.f == pytest.approx(F0_EXACT, abs=1e-14)
    assert sol.theta == np.inf


@pytest.mark.parametrize("beta, nu", [(BETA, 0.1), (np.pi / 4, 0.2), (1.2, 0.05)])
def test_closed_form_matches_trajectory_route(beta, nu):
    direct = matching_trajectory(beta, nu)
    closed = solve_matching(beta, nu)
    assert direct.f == pytest.approx(suppression_closed_form(beta, nu), abs=1e-10)
    assert direct.T == pytest.approx(closed.T, abs=1e-10)
    assert direct.theta == pytest.approx(closed.theta, abs=1e-9)
    assert direct.T1 == pytest.approx(closed.T1, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 1.4), st.floats(0.01, 0.99))
def test_invariants(beta, frac):
    nu = frac * nu_critical(beta)
    sol = solve_matching(beta, nu)
    assert sol.T1 <= 0
    assert sol.f >= 0
    assert sol.f == pytest.approx(-sol.T - sol.theta * nu, abs=1e-12)


def test_monotone_decreasing():
    nus = np.linspace(0, 0.25, 1000)
    f = np.array([suppression_closed_form(BETA, n) for n in nus])
    assert np.all(np.diff(f) < 0)


def test_derivative_identities():
    E = 1.0
    h = 1e-5
    for nu in np.linspace(0.01, 0.24, 12):
        sol = solve_matching(BETA, nu, E)
        N = nu * E
        dE = (suppression(BETA, E + h, N) - suppression(BETA, E - h, N)) / (2 * h)
        dN = (suppression(BETA, E, N + h) - suppression(BETA, E, N - h)) / (2 * h)
        assert abs(dE + sol.T) <= 1e-6 * abs(sol.T)
        assert abs(dN + sol.theta) <= 1e-6 * abs(sol.theta)


@pytest.mark.parametrize("E", [0.5, 1.0, 2.0])
def test_energy_scaling(E):
    for nu in (0.0, 0.1, 0.2):
        assert suppression(BETA, E, nu * E) == pytest.approx(E * suppression_closed_form(BETA, nu), rel=1e-14)


@pytest.mark.parametrize("nu", [-0.01, 0.26, 1.0])
def test_out_of_domain(nu):
    with pytest.raises(OutOfDomain):
        suppression_closed_form(BETA, nu)
    with pytest.raises(OutOfDomain):
        solve_matching(BETA, nu)


def test_trajectory_route_needs_interior():
    with pytest.raises(OutOfDomain):
        matching_trajectory(BETA, 0.0)


def test_critical_trajectory():
    assert critical_trajectory(BETA, 0.0) == pytest.approx((0, 0))
    x, y = critical_trajectory(BETA, np.pi / 2)
    assert (x, y) == pytest.approx((1.92382, 0.70711), abs=1e-5)
    # unit energy at the touch point, where w = y in the initial piece
    h = 1e-6
    xp, yp = critical_trajectory(BETA, h)
    xm, ym = critical_trajectory(BETA, -h)
    vx, vy = (xp - xm) / (2 * h), (yp - ym) / (2 * h)
    assert 0.5 * (vx**2 + vy**2) == pytest.approx(1, abs=1e-9)
