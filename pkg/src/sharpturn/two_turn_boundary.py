"""Boundary ``N_cr(E)`` of classically allowed reflection in the two-turn guide.

A critical trajectory touches the second turn line tangentially at
``t = 0``. In the intermediate piece it moves with inclination ``gamma``
to the guide axis; ``gamma = beta`` corresponds to touching at the top of
an oscillation and gives the closed-form boundary :func:`ncr_global`.
Smaller ``gamma`` gives a one-parameter family whose incoming momentum
``p0`` has local maxima. At small ``alpha`` these maxima are known in
closed form (:func:`local_branches`); :func:`critical_boundary` locates them
by direct maximization over the family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import OutOfDomain
from .geometry import ModelParams
from .numerics import bracket_root

GAMMA_MIN = 1e-6
SMALL_ALPHA_LIMIT = 0.2


@dataclass(frozen=True)
class GammaSolution:
    gamma: float
    t0: float
    phi_prime: float
    p0: float
    N: float


@dataclass
class BoundaryBranch:
    kind: str              # "Global" or "Local(n)"
    domain: tuple
    samples: list = field(default_factory=list)


def _trig(params):
    a, b = params.alpha, params.beta
    return np.cos(a), np.sin(a), np.cos(b), np.sin(b)


def ncr_global(params: ModelParams, E):
    """Boundary from trajectories touching the line at an oscillation top.

    ``N = E - E [sin b cos a - cos b sin a cos(cos a / (sqrt(2E) sin b))]^2``.
    Exact for the ``gamma = beta`` family; below the bifurcation energy a
    local branch can lie lower.
    """
    ca, sa, cb, sb = _trig(params)
    E = np.asarray(E, dtype=float)
    bracket = sb * ca - cb * sa * np.cos(ca / (np.sqrt(2 * E) * sb))
    return E - E * bracket**2


def gamma_solution(params: ModelParams, E: float, gamma) -> GammaSolution:
    """Member of the touching family with intermediate inclination ``gamma``.

    The trajectory touches the second turn line at ``t = 0``; ``t0 < 0`` is
    the time it crossed the first turn line and ``phi'`` its oscillation
    phase there.

    Raises
    ------
    OutOfDomain
        For ``gamma`` outside ``[1e-6, beta]``.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < GAMMA_MIN) or np.any(g > params.beta):
        raise OutOfDomain(f"gamma outside [{GAMMA_MIN}, beta]")
    t0, phi, p0 = _gamma_family(params, E, g)
    N = E - 0.5 * p0**2
    if g.ndim == 0:
        return GammaSolution(float(g), float(t0), float(phi), float(p0), float(N))
    return GammaSolution(g, t0, phi, p0, N)


def _gamma_family(params, E, g):
    ca, sa, cb, sb = _trig(params)
    root2E = np.sqrt(2 * E)
    ratio = np.clip(np.tan(g) / np.tan(params.beta), -1.0, 1.0)
    r = np.sqrt(np.maximum(1.0 / ratio**2 - 1.0, 0.0))
    t0 = -1.0 / (root2E * np.sin(g)) + r / ca
    phi = -ca / (root2E * np.sin(g)) + r - np.arccos(ratio)
    p0 = root2E * (ca * np.sin(g) - sa * np.cos(g) * np.cos(phi))
    return t0, phi, p0


def bifurcation_energy(params: ModelParams) -> float:
    """Energy below which local maxima of the family exist (small ``alpha``)."""
    ca, sa, cb, sb = _trig(params)
    return params.alpha**2 * cb**2 / (2 * sb**4)


def local_branches(params: ModelParams, E: float):
    """Small-``alpha`` local maxima of ``p0`` along the touching family.

    Returns
    -------
    list of (n, delta_gamma_n, p0_n, N_n)
        One entry per ``n`` with ``0 < delta_gamma_n < beta``. Empty above the
        bifurcation energy.
    """
    if params.alpha >= SMALL_ALPHA_LIMIT:
        raise OutOfDomain(f"alpha={params.alpha} too large for the small-angle formulas")
    a = params.alpha
    ca, sa, cb, sb = _trig(params)
    if a == 0:
        return []
    root2E = np.sqrt(2 * E)
    S = root2E * sb**2 / (a * cb)
    if S > 1:
        return []
    asS = np.arcsin(S)
    out = []
    n_hi = int((np.tan(params.beta) + params.beta) / (root2E * sb**2 / cb) / (2 * np.pi)) + 2
    for n in range(1, n_hi + 1):
        phase = 2 * np.pi * n - np.pi - asS
        dg = -np.tan(params.beta) + root2E * sb**2 / cb * phase
        if not 0 < dg < params.beta:
            continue
        p0 = 2 * root2E * sb - 2 * E * sb**2 * phase + a * root2E * cb * np.sqrt(1 - S * S)
        out.append((n, float(dg), float(p0), float(E - 0.5 * p0**2)))
    return out


def _branch_label(phi):
    n = int(np.rint((np.pi - phi) / (2 * np.pi)))
    return f"Local({n})"


def maximize_family(params: ModelParams, E: float, grid: int = 4001):
    """Global maximum of ``p0`` over the touching family.

    Only ``gamma >= beta - 2 alpha`` can beat the ``gamma = beta`` member,
    since ``p0 <= sqrt(2E) sin(gamma + alpha)``. That window is scanned and
    the best interior maxima are polished with a bounded scalar search.

    Returns
    -------
    (GammaSolution, str)
        Maximizing member and its label, ``"Global"`` for ``gamma = beta``.
    """
    b = params.beta
    g_lo = max(GAMMA_MIN, b - 2 * params.alpha - 1e-9)
    gs = np.linspace(g_lo, b, grid)
    _, _, p = _gamma_family(params, E, gs)
    end = gamma_solution(params, E, b)
    best, label = end, "Global"
    # interior local maxima of the sampled curve
    idx = np.where((p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:]))[0] + 1
    cells = [(gs[i - 1], gs[i + 1]) for i in idx[np.argsort(p[idx])[::-1][:4]]]
    # p0 has a square-root cusp at gamma = beta, so a maximum born there
    # sits in the last cell before the grid can see it
    cells.append((gs[-2], b))
    for lo, hi in cells:
        res = minimize_scalar(lambda g: -_gamma_family(params, E, g)[2],
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        cand = gamma_solution(params, E, float(res.x))
        if cand.p0 > best.p0 + 1e-15 * np.sqrt(E):
            best = cand
            label = _branch_label(cand.phi_prime)
    return best, label


def critical_boundary(params: ModelParams, E: float):
    """Lowest excitation admitting classical reflection.

    Returns
    -------
    (float, str)
        ``N_cr(E)`` and the branch that attains it (``"Global"`` or
        ``"Local(n)"``).
    """
    if params.alpha == 0:
        return float(E * np.cos(params.beta) ** 2), "Global"
    sol, label = maximize_family(params, E)
    return float(sol.N), label


def classical_optima(params: ModelParams, n_max: int = 12):
    """Energies of the lower-envelope touches and of the local minima of ``N_cr/E``.

    Returns
    -------
    list of (n, E_n, E_n_cr)
        For ``n0 <= n <= n_max`` with ``n0 = [cot b / (2 pi a) + 1/2] + 1``.
    """
    if not 0 < params.alpha < SMALL_ALPHA_LIMIT:
        raise OutOfDomain("classical optima need 0 < alpha < 0.2")
    a, b = params.alpha, params.beta
    n0 = classical_threshold(params)
    out = []
    for n in range(n0, n_max + 1):
        h = n - 0.5
        En = 1.0 / (8 * np.pi**2 * h**2 * np.sin(b) ** 2)
        Ecr = En * (1 - np.arcsin(1 / (np.tan(b) * 2 * np.pi * a * h)) / (np.pi * h))
        out.append((n, float(En), float(Ecr)))
    return out


def classical_threshold(params: ModelParams) -> int:
    a, b = params.alpha, params.beta
    return int(np.floor(1 / (np.tan(b) * 2 * np.pi * a) + 0.5)) + 1


def branch_birth_energy(params: ModelParams, n: int) -> float:
    """Energy at which the small-angle local branch ``n`` appears (``delta_gamma_n = 0``)."""
    ca, sa, cb, sb = _trig(params)
    a = params.alpha
    e_b = bifurcation_energy(params)

    def dg(E):
        S = min(np.sqrt(2 * E) * sb**2 / (a * cb), 1.0)
        return -np.tan(params.beta) + np.sqrt(2 * E) * sb**2 / cb * (
            2 * np.pi * n - np.pi - np.arcsin(S))

    return bracket_root(dg, 1e-12, e_b)
