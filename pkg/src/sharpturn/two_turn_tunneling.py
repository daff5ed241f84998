"""Classically forbidden reflection in the two-turn guide.

The reflected complex trajectory crosses the first turn line at the complex
time ``t0`` and touches the second one at ``t1``. Two complex matching
equations fix ``(t0, t1)`` for given ``(E, nu)``. Writing
``t1 - t0 = tau + i dT`` and expanding to first order in ``alpha`` at
``nu = 0`` gives the real reduced system

    1 - tau sqrt(2E) = k cos(tau) exp(dT)
    (1 + dT) exp(-dT) = k tau sin(tau),        k = alpha cot(beta)

whose solutions split into continuous branches labelled by the number of
transverse oscillations in the intermediate piece. The suppression
exponent of each branch is

    F0 = E (f0 - 4 k cos(tau) dT exp(dT)),     dF0/dE = f0 + 2 (dT + 1)

with ``f0`` the single-turn value at ``nu = 0``. The physical exponent is
glued from the branches while descending in energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BranchLost,
    BranchViolation,
    CoverageGap,
    InvalidSample,
    OutOfDomain,
    SolverError,
    UnitarityViolation,
)
from .geometry import ModelParams
from .numerics import RootConfig, bracket_root, complex_newton, continuation_scan
from .one_turn import suppression_closed_form

EXACT_RESIDUAL_TOL = 1e-10
REDUCED_RESIDUAL_TOL = 1e-10
DEFAULT_GRID = (1e-4, 5e-2, 2000)
DEFAULT_N_MAX = 12
DELTA_T_CUTOFF = 1.5


def default_grid():
    lo, hi, n = DEFAULT_GRID
    return np.geomspace(lo, hi, n)


def _k(params):
    return params.alpha / np.tan(params.beta)


def f_zero(params):
    return suppression_closed_form(params.beta, 0.0)


# ---------------------------------------------------------------------------
# exact matching system

@dataclass(frozen=True)
class MatchingSolution:
    """Solution of the exact matching equations and the quantities derived from it.

    ``F`` is the suppression exponent ``2 Im S - E T - N theta``.
    ``theta`` is ``+inf`` at ``nu = 0``.
    """

    E: float
    nu: float
    t0: complex
    t1: complex
    phi1: complex
    tau: float
    delta_T: float
    tau1: float
    T1: float
    p0_prime: complex
    x0_prime: complex
    a_prime: complex
    abar_prime: complex
    T: float
    theta: float
    F: float
    residual: float


def exact_residual(params: ModelParams, E: float, nu: float, t0, t1):
    """Residuals of the two complex matching equations.

    The first states that the trajectory touches the second turn line
    (written in the intermediate frame); the second fixes the
    transverse excitation in the initial piece. The second one is divided
    by nothing that vanishes at ``alpha = 0``, so the system stays regular
    in the single-turn limit. ``sqrt(1 - nu)`` takes the positive root.
    """
    if not E > 0 or not 0 <= nu < 1:
        raise OutOfDomain(f"E={E}, nu={nu}")
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    phi1 = t1 * ca * cb
    dphi = ca * (t1 - t0)
    r1 = ca / (np.sqrt(2 * E) * sb) + np.sin(phi1) / cb - np.cos(phi1) * dphi
    r2 = (ca * sb * np.cos(phi1)
          - sa * (np.sin(phi1) * np.sin(dphi) + cb * np.cos(phi1) * np.cos(dphi))
          - np.sqrt(1 - nu))
    return np.array([r1, r2])


def seed_from_reduced(params: ModelParams, tau: float, delta_T: float):
    """Starting ``(t0, t1)`` for the exact system from a reduced solution.

    Raises
    ------
    OutOfDomain
        If the reduced point gives no real ``cosh(T1 cos b)``, i.e. the
        seed would put ``T1`` at zero.
    """
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    k = _k(params)
    ch = (1 + k * np.cos(tau) * np.exp(delta_T)) / sb
    if not ch > 1 + 1e-12:
        raise OutOfDomain(f"no exact seed: cosh argument {ch:.6g} <= 1")
    T1 = -np.arccosh(ch) / cb
    tau1 = -(1 / (tau * cb)) * (1 / cb - delta_T / np.tanh(T1 * cb))
    t1 = tau1 + 1j * T1
    t0 = t1 - (tau + 1j * delta_T)
    return t0, t1


def matching_quantities(params: ModelParams, E: float, nu: float, t0, t1) -> MatchingSolution:
    """Fill in the derived quantities of a matching pair ``(t0, t1)``."""
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    t0, t1 = complex(t0), complex(t1)
    root2E = np.sqrt(2 * E)
    phi1 = t1 * ca * cb
    # final-piece solution expressed in the intermediate frame at t = 0
    p0p = root2E * sb * np.cos(phi1)
    x0p = 1 + root2E * (np.tan(params.beta) / ca) * (np.sin(phi1) - phi1 * np.cos(phi1))
    amp = np.sqrt(E / 2) / ca
    ap = amp * np.exp(1j * phi1 / cb) * (np.sin(phi1) + 1j * cb * np.cos(phi1))
    abp = amp * np.exp(-1j * phi1 / cb) * (np.sin(phi1) - 1j * cb * np.cos(phi1))
    yp0 = ap * np.exp(-1j * t0 * ca) + abp * np.exp(1j * t0 * ca)
    vyp0 = -1j * ca * (ap * np.exp(-1j * t0 * ca) - abp * np.exp(1j * t0 * ca))
    p0 = np.sqrt(2 * E * (1 - nu))
    T = 2 * t0.imag + 2 * sa * yp0.imag / p0
    N = nu * E
    if nu == 0:
        theta = np.inf
        n_theta = 0.0
    else:
        y = ca * yp0
        vy = sa * p0p + ca * vyp0
        a = 0.5 * (y + 1j * vy) * np.exp(1j * t0)
        T_plus_theta = np.log(N / (2 * abs(a) ** 2))
        theta = float(T_plus_theta - T)
        n_theta = N * theta
    F = p0p.imag - E * T - n_theta
    res = float(np.max(np.abs(exact_residual(params, E, nu, t0, t1))))
    d = t1 - t0
    return MatchingSolution(E=E, nu=nu, t0=t0, t1=t1, phi1=complex(phi1),
                            tau=float(d.real), delta_T=float(d.imag),
                            tau1=float(t1.real), T1=float(t1.imag),
                            p0_prime=complex(p0p), x0_prime=complex(x0p),
                            a_prime=complex(ap), abar_prime=complex(abp),
                            T=float(T), theta=theta, F=float(F), residual=res)


def solve_exact(params: ModelParams, E: float, nu: float, seed, cfg: RootConfig | None = None):
    """Newton solution of the exact matching system.

    Parameters
    ----------
    seed : (complex, complex)
        Starting ``(t0, t1)``, e.g. from :func:`seed_from_reduced`.

    Raises
    ------
    NonConvergence, SingularJacobian
        From the Newton iteration.
    BranchViolation
        If the solution has ``Im t1 >= 0`` or ``tau <= 0``.
    """
    cfg = cfg or RootConfig(residual_tolerance=1e-12)
    z = complex_newton(lambda v: exact_residual(params, E, nu, v[0], v[1]),
                       np.array(seed, dtype=complex), cfg)
    sol = matching_quantities(params, E, nu, z[0], z[1])
    if sol.T1 >= 0:
        raise BranchViolation(f"Im t1 = {sol.T1} is not negative")
    if sol.tau <= 0:
        raise BranchViolation(f"tau = {sol.tau} is not positive")
    return sol


# ---------------------------------------------------------------------------
# reduced system

def reduced_residual(params: ModelParams, E: float, tau, delta_T):
    k = _k(params)
    r1 = 1 - tau * np.sqrt(2 * E) - k * np.cos(tau) * np.exp(delta_T)
    r2 = (1 + delta_T) * np.exp(-delta_T) - k * tau * np.sin(tau)
    return np.array([r1, r2])


def reduced_energy(params: ModelParams, tau, delta_T):
    """Energy at which ``(tau, dT)`` solves the first reduced equation (0 if none)."""
    s = (1 - _k(params) * np.cos(tau) * np.exp(delta_T)) / tau
    return np.where(s > 0, 0.5 * s * s, 0.0)


def reduced_suppression(params: ModelParams, E, tau, delta_T):
    f0 = f_zero(params)
    k = _k(params)
    F0 = E * (f0 - 4 * k * np.cos(tau) * delta_T * np.exp(delta_T))
    dF0 = f0 + 2 * (delta_T + 1)
    return F0, dF0


def _h(d):
    return (1 + d) * np.exp(-d)


def _delta_T_lower(rhs):
    rhs = min(rhs, 1 - 1e-13)
    if rhs <= 0:
        lo = -1.0
        while _h(lo) > rhs:
            lo -= 1.0
        return bracket_root(lambda d: _h(d) - rhs, lo, -1.0, RootConfig(1e-15))
    return bracket_root(lambda d: _h(d) - rhs, -1.0, 0.0, RootConfig(1e-15))


def _delta_T_upper(rhs):
    rhs = min(rhs, 1 - 1e-13)
    if rhs <= 0:
        return np.inf
    hi = 1.0
    while _h(hi) > rhs:
        hi *= 2
    return bracket_root(lambda d: _h(d) - rhs, 0.0, hi, RootConfig(1e-15))


# ---------------------------------------------------------------------------
# bands and branches

@dataclass(frozen=True)
class BandInfo:
    n1: int
    delta_tau: list
    first_band: tuple


def enumerate_bands(params: ModelParams, n_max: int = DEFAULT_N_MAX) -> BandInfo:
    """First local branch index and band half-widths at small ``alpha``.

    Bands are the ``tau`` intervals where ``tau sin(tau) <= tan(b)/a``.
    The formulas can be evaluated for any ``0 < alpha < beta`` but are only
    accurate to ``O(alpha)``.
    """
    if not params.alpha > 0:
        raise OutOfDomain("band enumeration needs alpha > 0")
    ratio = np.tan(params.beta) / (2 * np.pi * params.alpha)
    n1 = int(np.floor(ratio + 0.5)) + 1
    widths = [(n, float(np.arcsin(ratio / (n - 0.5)))) for n in range(n1, max(n_max, n1) + 1)]
    first = (0.0, 2 * np.pi * (n1 - 1) + widths[0][1])
    return BandInfo(n1=n1, delta_tau=widths, first_band=first)


def _hump_argmax(m):
    """Maximizer of ``tau sin(tau)`` on hump ``m``, i.e. on ``[2 pi m, (2m + 1) pi]``."""
    return bracket_root(lambda t: np.sin(t) + t * np.cos(t), (2 * m + 0.5) * np.pi,
                        (2 * m + 1) * np.pi, RootConfig(1e-14))


def first_local_index(params: ModelParams) -> int:
    """Exact counterpart of ``n1``: first ``n`` whose band is closed on the left.

    Local branch ``n`` lives between humps ``n - 1`` and ``n`` of
    ``k tau sin(tau)`` and needs hump ``n - 1`` to exceed 1. Usually equal to
    ``enumerate_bands().n1``; the two differ when a hump peaks within
    ``O(alpha**2)`` of 1.
    """
    if not 0 < params.alpha < 0.2:
        raise OutOfDomain("band enumeration needs 0 < alpha < 0.2")
    k = _k(params)
    m = 0
    while True:
        t = _hump_argmax(m)
        if k * t * np.sin(t) > 1:
            return m + 1
        m += 1


def band_edges(params: ModelParams, kind: str):
    """Exact ``tau`` interval of a branch, bounded by roots of ``k tau sin(tau) = 1``."""
    k = _k(params)
    g = lambda t: k * t * np.sin(t) - 1
    cfg = RootConfig(1e-14)
    n1 = first_local_index(params)
    if kind == "Global":
        m = n1 - 1
        return 0.0, bracket_root(g, 2 * np.pi * m, _hump_argmax(m), cfg)
    n = branch_index(kind)
    if n < n1:
        raise OutOfDomain(f"no local branch {n} below n1={n1}")
    left = bracket_root(g, _hump_argmax(n - 1), (2 * n - 1) * np.pi, cfg)
    right = bracket_root(g, 2 * np.pi * n, _hump_argmax(n), cfg)
    return left, right


def branch_index(kind: str) -> int:
    if kind == "Global":
        return 0
    if kind.startswith("Local(") and kind.endswith(")"):
        return int(kind[6:-1])
    raise ValueError(f"unknown branch kind {kind!r}")


def _segments(params, kind):
    """Pieces ``(tau_start, tau_end, root)`` of a branch, ordered by decreasing energy."""
    lo_edge, hi_edge = band_edges(params, kind)
    if kind == "Global":
        n1 = first_local_index(params)
        return [(1e-9, hi_edge, "lower"),
                (hi_edge, 2 * np.pi * (n1 - 1) + 1e-12, "upper")]
    n = branch_index(kind)
    return [((2 * n - 1) * np.pi - 1e-9, lo_edge, "upper"),
            (lo_edge, hi_edge, "lower"),
            (hi_edge, 2 * n * np.pi + 1e-12, "upper")]


def _curve_point(params, tau, root):
    k = _k(params)
    rhs = k * tau * np.sin(tau)
    d = _delta_T_lower(rhs) if root == "lower" else _delta_T_upper(rhs)
    return d, float(reduced_energy(params, tau, d)) if np.isfinite(d) else 0.0


def branch_point(params: ModelParams, kind: str, E: float):
    """Reduced solution ``(tau, dT)`` of a branch at energy ``E``.

    Uses the parametric form of the branch: for given ``tau`` the second
    reduced equation fixes ``dT`` and the first one the energy, which
    decreases monotonically along each branch.

    Raises
    ------
    BranchLost
        If ``E`` lies outside the branch's energy range.
    """
    logE = np.log(E)
    for ta, tb, root in _segments(params, kind):
        ea = _curve_point(params, ta, root)[1]
        eb = _curve_point(params, tb, root)[1]
        if ea >= E >= eb:
            def f(t):
                e = _curve_point(params, t, root)[1]
                return (np.log(e) if e > 0 else -1e3) - logE
            tau = bracket_root(f, ta, tb, RootConfig(1e-14))
            return tau, _curve_point(params, tau, root)[0]
    raise BranchLost(E)


@dataclass
class BranchSample:
    E: float
    tau: float
    delta_T: float
    F0: float
    dF0_dE: float
    exact: MatchingSolution | None = None

    @property
    def T(self):
        if self.exact is not None:
            return self.exact.T
        return -self.dF0_dE


@dataclass
class TunnelBranch:
    kind: str
    band: tuple
    samples: list = field(default_factory=list)
    end: float | None = None

    def arrays(self):
        cols = ("E", "tau", "delta_T", "F0", "T")
        return {c: np.array([getattr(s, c) for s in self.samples]) for c in cols}


def _asymptotic_seed(params, kind, E):
    if kind == "Global":
        return 1 / np.sqrt(2 * E), -1.0
    return 2 * np.pi * branch_index(kind), float(np.log(np.tan(params.beta) / params.alpha))


def solve_branch(params: ModelParams, kind: str, E_grid=None, exact: bool = False,
                 delta_T_cutoff: float = DELTA_T_CUTOFF) -> TunnelBranch:
    """Follow one branch of the reduced system across an energy grid.

    The global branch is followed downward from its high-energy end and
    dropped once ``dT`` exceeds ``delta_T_cutoff``; a local branch is
    followed upward from its low-energy end. The start point is the
    asymptotic seed polished on the parametric form of the branch; later
    points are seeded by their predecessor. With ``exact=True`` each
    sample is also refined through :func:`solve_exact`.
    """
    grid = np.sort(np.asarray(default_grid() if E_grid is None else E_grid, dtype=float))
    lo, hi = band_edges(params, kind)
    k_lim = np.tan(params.beta) / params.alpha
    descending = kind == "Global"
    order = grid[::-1] if descending else grid
    cfg = RootConfig(residual_tolerance=1e-12)

    def accept(E, tau, dT):
        if not (lo - 1e-9 <= tau <= hi + 1e-9) or not tau * np.sin(tau) < k_lim:
            raise InvalidSample(f"tau={tau} left the band of {kind}")
        if descending and dT > delta_T_cutoff:
            raise InvalidSample(f"dT={dT} above cutoff")

    def solver(E, seed):
        z = complex_newton(lambda v: reduced_residual(params, E, v[0], v[1]),
                           np.array(seed, dtype=complex), cfg)
        tau, dT = float(z[0].real), float(z[1].real)
        accept(E, tau, dT)
        return tau, dT

    # first grid point: asymptotic seed polished on the parametric curve
    start = 0
    seed = None
    while start < len(order):
        try:
            tau0, dT0 = _asymptotic_seed(params, kind, order[start])
            if not (lo <= tau0 <= hi) or kind != "Global":
                tau0, dT0 = branch_point(params, kind, order[start])
            seed = solver(order[start], (tau0, dT0))
            break
        except SolverError:
            start += 1
    branch = TunnelBranch(kind=kind, band=(lo, hi))
    if seed is None:
        return branch
    try:
        pairs = continuation_scan(solver, order[start:], seed)
        end = None
    except BranchLost as lost:
        pairs = lost.partial
        end = lost.parameter
    branch.end = end
    samples = []
    prev_exact = None
    for E, (tau, dT) in pairs:
        F0, dF0 = reduced_suppression(params, E, tau, dT)
        ex = None
        if exact:
            ex = _exact_sample(params, E, tau, dT, prev_exact)
            prev_exact = ex
        samples.append(BranchSample(E=float(E), tau=tau, delta_T=dT, F0=float(F0),
                                    dF0_dE=float(dF0), exact=ex))
    samples.sort(key=lambda s: s.E)
    branch.samples = samples
    return branch


def _exact_sample(params, E, tau, dT, prev):
    try:
        return solve_exact(params, E, 0.0, seed_from_reduced(params, tau, dT))
    except (SolverError, OutOfDomain):
        if prev is None:
            raise
        return solve_exact(params, E, 0.0, (prev.t0, prev.t1))


def suppression_from_solution(params: ModelParams, sample):
    """Suppression exponent and its energy derivative.

    For a reduced sample (anything with ``E``, ``tau``, ``delta_T``) returns
    ``F0 = E (f0 - 4 k cos(tau) dT exp(dT))`` and ``f0 + 2 (dT + 1)``. For a
    :class:`MatchingSolution` returns the action-based ``F`` and ``-T``.

    Raises
    ------
    InvalidSample
        If a reduced sample does not satisfy the reduced equations.
    """
    if isinstance(sample, MatchingSolution):
        if sample.residual > EXACT_RESIDUAL_TOL:
            raise InvalidSample(f"matching residual {sample.residual:.3g}")
        return sample.F, -sample.T
    r = reduced_residual(params, sample.E, sample.tau, sample.delta_T)
    if np.max(np.abs(r)) > REDUCED_RESIDUAL_TOL:
        raise InvalidSample(f"reduced residual {np.max(np.abs(r)):.3g}")
    F0, dF0 = reduced_suppression(params, sample.E, sample.tau, sample.delta_T)
    return float(F0), float(dF0)


# ---------------------------------------------------------------------------
# gluing

@dataclass
class SuppressionCurve:
    E: np.ndarray
    F0: np.ndarray
    branch: list
    switch_energies: list
    tau: np.ndarray
    delta_T: np.ndarray
    T: np.ndarray

    @property
    def points(self):
        return list(zip(self.E.tolist(), self.F0.tolist(), self.branch))

    def is_switch(self):
        flags = np.zeros(len(self.E), bool)
        for i in range(len(self.E) - 1):
            flags[i] = self.branch[i] != self.branch[i + 1]
        return flags


def glue_branches(params: ModelParams, branches, use_exact: bool = False) -> SuppressionCurve:
    """Assemble the physical suppression exponent from solved branches.

    Energies are visited in decreasing order. The curve starts on the global
    branch and moves to the next local branch (in order of increasing
    ``n``) at the first energy where that branch is lower; an abandoned
    branch is never used again.

    Raises
    ------
    CoverageGap
        If the current branch has no sample at some grid energy and no
        later branch is available.
    UnitarityViolation
        If the glued exponent is not positive somewhere.
    """
    order = sorted(branches, key=lambda b: branch_index(b.kind))
    if not order or order[0].kind != "Global":
        raise CoverageGap("global branch missing")
    tables = []
    energies = set()
    for br in order:
        tab = {}
        for s in br.samples:
            F = s.exact.F if (use_exact and s.exact is not None) else s.F0
            tab[s.E] = (F, s)
            energies.add(s.E)
        tables.append(tab)
    grid = sorted(energies, reverse=True)
    cur = 0
    out = []
    switches = []
    for E in grid:
        while cur + 1 < len(order):
            nxt = tables[cur + 1].get(E)
            here = tables[cur].get(E)
            if nxt is not None and (here is None or nxt[0] < here[0]):
                cur += 1
                switches.append((E, order[cur].kind))
            else:
                break
        entry = tables[cur].get(E)
        if entry is None:
            if out:
                raise CoverageGap(f"no physical branch at E={E:.6g}")
            continue
        out.append((E, entry[0], order[cur].kind, entry[1]))
    out.reverse()
    E = np.array([o[0] for o in out])
    F = np.array([o[1] for o in out])
    if np.any(F <= 0):
        bad = E[F <= 0][0]
        raise UnitarityViolation(f"non-positive suppression exponent at E={bad:.6g}")
    samples = [o[3] for o in out]
    return SuppressionCurve(
        E=E, F0=F, branch=[o[2] for o in out],
        switch_energies=[(float(e), k) for e, k in switches],
        tau=np.array([s.exact.tau if use_exact and s.exact else s.tau for s in samples]),
        delta_T=np.array([s.exact.delta_T if use_exact and s.exact else s.delta_T for s in samples]),
        T=np.array([s.exact.T if use_exact and s.exact else s.T for s in samples]),
    )


def solve_all_branches(params: ModelParams, E_grid=None, n_max: int = DEFAULT_N_MAX,
                       exact: bool = False, workers: int = 1):
    """Global branch plus local branches ``n1 .. n_max`` on a common grid."""
    n1 = first_local_index(params)
    kinds = ["Global"] + [f"Local({n})" for n in range(n1, n_max + 1)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(solve_branch, params, k, E_grid, exact) for k in kinds]
            return [f.result() for f in futs]
    return [solve_branch(params, k, E_grid, exact) for k in kinds]


def suppression_curve(params: ModelParams, E_grid=None, n_max: int = DEFAULT_N_MAX,
                      exact: bool = False, workers: int = 1):
    branches = solve_all_branches(params, E_grid, n_max, exact, workers)
    return glue_branches(params, branches, use_exact=exact), branches


# ---------------------------------------------------------------------------
# optimal energies

@dataclass(frozen=True)
class TunnelingOptima:
    minima: list           # (n, E'_n)
    n0_prime: int          # threshold from the closed-form estimate


def tunneling_optima(params: ModelParams, n_max: int = DEFAULT_N_MAX) -> TunnelingOptima:
    """Local minima of ``F0/E`` and the closed-form threshold for minima of ``F0``.

    ``E'_n = (1 + 2 a e^-1 cot b) / (8 pi^2 (n - 1/2)^2)`` for
    ``n1 <= n <= n_max``. The threshold is
    ``n0' = [tan(b)/(4 pi a) f0 exp(1 + f0/2) + 1/2] + 1``.
    """
    if not 0 < params.alpha < 0.2:
        raise OutOfDomain("optima need 0 < alpha < 0.2")
    n1 = enumerate_bands(params, n_max).n1
    k = _k(params)
    f0 = f_zero(params)
    minima = [(n, float((1 + 2 * k * np.exp(-1)) / (8 * np.pi**2 * (n - 0.5) ** 2)))
              for n in range(n1, n_max + 1)]
    x = np.tan(params.beta) / (4 * np.pi * params.alpha) * f0 * np.exp(1 + f0 / 2)
    return TunnelingOptima(minima=minima, n0_prime=int(np.floor(x + 0.5)) + 1)


def observed_optimal_threshold(params: ModelParams, branches):
    """Smallest ``n`` whose oscillation of ``dT`` reaches ``-1 - f0/2``.

    Oscillation ``n`` is the part of the solution with
    ``tau in [2 pi (n - 1), 2 pi n]``; it belongs to the global branch for
    ``n < n1`` and to local branch ``n`` otherwise. Returns ``None`` if no
    such ``n`` exists among the supplied branches.
    """
    target = -1 - f_zero(params) / 2
    n1 = first_local_index(params)
    by_kind = {b.kind: b for b in branches}
    reach = {}
    g = by_kind.get("Global")
    if g is not None and g.samples:
        arr = g.arrays()
        for n in range(1, n1):
            sel = (arr["tau"] >= 2 * np.pi * (n - 1)) & (arr["tau"] <= 2 * np.pi * n)
            if sel.any():
                reach[n] = bool(arr["delta_T"][sel].min() <= target)
    for kind, b in by_kind.items():
        if kind != "Global" and b.samples:
            reach[branch_index(kind)] = bool(b.arrays()["delta_T"].min() <= target)
    hits = [n for n in sorted(reach) if reach[n]]
    return hits[0] if hits else None


def local_minima(E, values):
    """Indices of strict interior local minima of a sampled curve."""
    v = np.asarray(values)
    return [i for i in range(1, len(v) - 1) if v[i] < v[i - 1] and v[i] < v[i + 1]]


# ---------------------------------------------------------------------------
# accuracy of the reduction

ACCURACY_WINDOW = (0.5, 3.0)


def reduction_error(params: ModelParams, window=ACCURACY_WINDOW, points: int = 200) -> float:
    """Mean ``|tau_exact - tau_reduced|`` on the global branch.

    Both solutions are compared at the same energies, taken on a fixed
    window of the scaled energy ``E / alpha**2`` so that runs at different
    ``alpha`` probe the same part of the branch. The reduction is first
    order in ``alpha``, so halving ``alpha`` should roughly halve the result.

    Raises
    ------
    CoverageGap
        If the global branch does not cover the window.
    """
    if not params.alpha > 0:
        raise OutOfDomain("reduction error needs alpha > 0")
    E = params.alpha**2 * np.geomspace(window[0], window[1], points)
    branch = solve_branch(params, "Global", E, exact=True)
    if len(branch.samples) < points:
        raise CoverageGap(f"global branch covers {len(branch.samples)} of {points} points")
    diffs = [abs(s.exact.tau - s.tau) for s in branch.samples]
    return float(np.mean(diffs))
