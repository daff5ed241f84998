"""Single sharp turn: critical data and the over-barrier reflection exponent.

With energy ``E`` and transverse excitation ``N = nu * E`` the suppression
exponent is ``F(E, N) = E * f(nu)``. Reflection is classically allowed for
``nu >= cos(beta)**2``; below that the exponent follows from a complex
trajectory that meets the turn line at the imaginary time ``t1 = i T1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchViolation, OutOfDomain, ResidualTooLarge
from .numerics import RootConfig, complex_newton

CLOSED_FORM_TOLERANCE = 1e-10


def nu_critical(beta: float) -> float:
    """Smallest excitation ratio ``N/E`` admitting classical reflection."""
    return float(np.cos(beta) ** 2)


def _check_nu(beta, nu):
    ncr = nu_critical(beta)
    if not (0.0 <= nu <= ncr):
        raise OutOfDomain(f"nu={nu} outside [0, {ncr}]")
    return ncr


def suppression_closed_form(beta: float, nu: float) -> float:
    """Suppression exponent per unit energy, ``f = F / E``.

    Raises
    ------
    OutOfDomain
        If ``nu`` is outside ``[0, cos(beta)**2]``.
    """
    ncr = _check_nu(beta, nu)
    cb, sb = np.cos(beta), np.sin(beta)
    if nu == 0:
        return float(-2.0 + 2.0 * np.arctanh(cb) / cb)
    d = max(ncr - nu, 0.0)
    X = np.sqrt(d) / sb
    return float((2.0 / cb) * (np.arcsinh(X)
                               - nu * cb * np.arcsinh(X / np.sqrt(nu))
                               - np.sqrt(d * (1.0 - nu))))


@dataclass(frozen=True)
class OneTurnSolution:
    """Matching data of the single-turn complex trajectory.

    ``T`` and ``theta`` do not depend on the energy; ``p0`` and ``a`` refer
    to ``energy``. ``theta`` is ``+inf`` at ``nu = 0`` where only the product
    ``theta * nu`` (zero) is meaningful.
    """

    nu: float
    T1: float
    T: float
    theta: float
    p0: float
    a: complex
    f: float
    energy: float = 1.0


def solve_matching(beta: float, nu: float, energy: float = 1.0) -> OneTurnSolution:
    """Matching solution from the closed-form relations for ``T1``, ``T``, ``theta``.

    ``T1`` follows from ``sin(t1 cos b) = -i sqrt(nu_cr - nu) / sin b``,
    with the branch ``T1 <= 0``. Then
    ``T1 - T/2 = -sqrt((1 - nu/cos^2 b) / (1 - nu))`` and
    ``sinh(T1 - (T + theta)/2) = -sqrt(cos^2 b - nu) / (sin b sqrt(nu))``.
    The endpoints ``nu = 0`` and ``nu = nu_cr`` are taken as limits.
    """
    ncr = _check_nu(beta, nu)
    cb, sb = np.cos(beta), np.sin(beta)
    d = max(ncr - nu, 0.0)
    T1 = -np.arcsinh(np.sqrt(d) / sb) / cb
    if T1 > 0:
        raise BranchViolation(f"T1={T1} > 0")
    T = 2.0 * T1 + 2.0 * np.sqrt((1.0 - nu / cb**2) / (1.0 - nu))
    if nu == 0:
        theta = np.inf
        f = -T
    else:
        T_plus_theta = 2.0 * T1 + 2.0 * np.arcsinh(np.sqrt(d) / (sb * np.sqrt(nu)))
        theta = T_plus_theta - T
        f = -T - theta * nu
    if d == 0:
        T1, T, theta, f = 0.0, 0.0, 0.0, 0.0
    p0 = np.sqrt(2.0 * energy * (1.0 - nu))
    if nu == 0:
        a = 0j
    else:
        a = complex(np.sqrt(nu * energy / 2.0) * np.exp(-0.5 * (T + theta)))
    f_closed = suppression_closed_form(beta, nu)
    if abs(f - f_closed) > CLOSED_FORM_TOLERANCE:
        raise ResidualTooLarge(f"matching f={f!r} differs from closed form {f_closed!r}")
    return OneTurnSolution(nu=nu, T1=float(T1), T=float(T), theta=float(theta),
                           p0=float(p0), a=a, f=float(f), energy=energy)


def matching_trajectory(beta: float, nu: float, cfg: RootConfig | None = None) -> OneTurnSolution:
    """Solve the matching problem directly on the complex trajectory.

    Independent of the closed-form relations: in the final region the
    unit-energy solution oscillates along the turn line,
    ``x = sqrt(2) tan(b) sin(t cos b)``, ``y = sqrt(2) sin(t cos b)``. The
    complex time ``t1`` where its transverse energy ``(ydot^2 + y^2)/2``
    equals ``nu`` is found by Newton iteration; ``T`` and ``theta`` are then
    read off the free motion and the oscillator amplitudes in the initial
    region.
    """
    ncr = _check_nu(beta, nu)
    if not 0 < nu < ncr:
        raise OutOfDomain("direct matching needs 0 < nu < nu_cr")
    cb, sb = np.cos(beta), np.sin(beta)
    r2 = np.sqrt(2.0)

    def y(t):
        return r2 * np.sin(t * cb)

    def ydot(t):
        return r2 * cb * np.cos(t * cb)

    def resid(t):
        return 0.5 * (ydot(t) ** 2 + y(t) ** 2) - nu

    # start on the negative imaginary axis near the known branch
    seed = -1j * np.arcsinh(np.sqrt(ncr - nu) / sb) / cb * 0.9
    t1 = complex_newton(resid, seed, cfg or RootConfig(residual_tolerance=1e-14))
    T1 = t1.imag
    if T1 > 0:
        raise BranchViolation(f"T1={T1} > 0")
    x1 = r2 * np.tan(beta) * np.sin(t1 * cb)
    p0 = r2 * np.tan(beta) * cb * np.cos(t1 * cb)
    T = -2.0 * (x1 - p0 * t1).imag / p0.real
    yy, vv = y(t1), ydot(t1)
    a = 0.5 * (yy + 1j * vv) * np.exp(1j * t1)
    abar = 0.5 * (yy - 1j * vv) * np.exp(-1j * t1)
    T_plus_theta = np.log(abar / np.conj(a)).real
    theta = T_plus_theta - T
    return OneTurnSolution(nu=nu, T1=float(T1), T=float(T), theta=float(theta),
                           p0=float(p0.real), a=complex(a), f=float(-T - theta * nu))


def critical_trajectory(beta: float, t):
    """Real trajectory of unit energy touching the turn line at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(2.0) * t * np.sin(beta), np.sqrt(2.0) * np.sin(t) * np.cos(beta)


def suppression(beta: float, energy: float, excitation: float) -> float:
    """``F(E, N) = E f(N / E)``."""
    return energy * suppression_closed_form(beta, excitation / energy)
