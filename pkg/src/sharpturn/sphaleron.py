"""Dynamics near a smoothened turn: the excited sphaleron and its decay.

Close to a smoothened turn the valley function takes the form

    w = K (eta - b v(xi / b)),    K = cos(alpha) cos(beta),

with ``v(psi) = psi tan(beta) / (1 + e^psi)``. Because ``v`` has a maximum
at ``psi0``, the particle can sit at ``xi = b psi0`` while oscillating
along ``eta``. This orbit is unstable: in the time variable
``s = (K t + phi) / 2`` small deviations obey a Mathieu equation with
``q = -2 v''(psi0) A / b``, oscillating for ``sin(2s) > 0`` and growing
for ``sin(2s) < 0``.

Orbits are integrated in the scaled coordinates ``(psi, eta)`` so that
deviations of order ``1e-6`` in ``psi`` stay resolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .classical import LaunchSpec, propagate_smooth
from .errors import (
    InvalidParams,
    NoEscape,
    NoGrowth,
    ResidualTooLarge,
    SharpModel,
    SmallQ,
)
from .geometry import ModelParams, smooth_profile, waveguide_value_and_gradient
from .numerics import OdeConfig, RootConfig, bracket_root, integrate_ode

RESIDUAL_TOL = 1e-8
MIN_Q = 25.0
ESCAPE_DISTANCE = 2.0
HALF_PERIOD_INTEGRAL = 0.5990701173677961   # int_{pi/4}^{pi/2} sqrt(sin 2s) ds

_TIGHT = OdeConfig(rel_tol=1e-12, abs_tol=1e-14)


def default_amplitude(params: ModelParams) -> float:
    """Oscillation amplitude giving the orbit unit energy."""
    return np.sqrt(2.0) / _stiffness(params)


def _stiffness(params):
    return np.cos(params.alpha) * np.cos(params.beta)


@dataclass(frozen=True)
class SphaleronOrbit:
    """``xi = b psi0``, ``eta = A sin(K t + phi) + b v(psi0)``."""

    A_eta: float
    phi_eta: float
    psi0: float
    b: float
    params: ModelParams = field(repr=False)

    @property
    def K(self):
        return _stiffness(self.params)

    @property
    def period(self):
        return 2 * np.pi / self.K

    @property
    def energy(self):
        return 0.5 * (self.A_eta * self.K) ** 2

    @property
    def xi(self):
        return self.b * self.psi0

    def s_of_t(self, t):
        return 0.5 * (self.K * np.asarray(t) + self.phi_eta)

    def t_of_s(self, s):
        return (2 * np.asarray(s) - self.phi_eta) / self.K

    def eta(self, t):
        prof = smooth_profile(self.params)
        return self.A_eta * np.sin(self.K * np.asarray(t) + self.phi_eta) + self.b * prof.v(self.psi0)

    def state(self, t):
        """Scaled state ``(psi, eta, dpsi/dt, deta/dt)`` at time ``t``."""
        ph = self.K * t + self.phi_eta
        return np.array([self.psi0, float(self.eta(t)), 0.0,
                         self.A_eta * self.K * np.cos(ph)])


def scaled_field(params: ModelParams):
    """Equations of motion for ``(psi, eta, psi', eta')`` near the turn."""
    prof = smooth_profile(params)
    K, b = _stiffness(params), params.b

    def fun(t, u):
        w = K * (u[1] - b * prof.v(u[0]))
        return np.array([u[2], u[3], K * w * prof.dv(u[0]) / b, -K * w])
    return fun


def _scaled_energy(params, prof, u):
    K, b = _stiffness(params), params.b
    w = K * (u[1] - b * prof.v(u[0]))
    return 0.5 * (b * u[2]) ** 2 + 0.5 * u[3] ** 2 + 0.5 * w**2


def _to_initial(params, u):
    """Map a scaled state to ``(x, y, vx, vy)`` in the initial frame."""
    a, be = params.alpha, params.beta
    xi, eta = params.b * u[0], u[1]
    vxi, veta = params.b * u[2], u[3]
    cb, sb = np.cos(be), np.sin(be)
    xp, yp = cb * xi + sb * eta + params.L, -sb * xi + cb * eta
    vxp, vyp = cb * vxi + sb * veta, -sb * vxi + cb * veta
    ca, sa = np.cos(a), np.sin(a)
    return np.array([ca * xp - sa * yp, sa * xp + ca * yp,
                     ca * vxp - sa * vyp, sa * vxp + ca * vyp])


def _require(params):
    if params.b == 0:
        raise SharpModel("the sphaleron needs b > 0")
    if not params.is_one_turn:
        raise InvalidParams("sphaleron dynamics are set up for the single-turn guide")


def build_sphaleron(params: ModelParams, A_eta: float | None = None,
                    phi_eta: float = 0.0) -> SphaleronOrbit:
    """Construct the periodic orbit at the maximum of ``v`` and verify it.

    The orbit is mapped to the initial frame and its acceleration compared
    with ``-w grad w`` from the full valley function over one period.

    Raises
    ------
    SharpModel
        If ``b == 0``.
    InvalidParams
        For a two-turn guide or a non-positive amplitude.
    ResidualTooLarge
        If the orbit misses the equations of motion by more than 1e-8.
    """
    _require(params)
    A = default_amplitude(params) if A_eta is None else float(A_eta)
    if not A > 0:
        raise InvalidParams("A_eta must be positive")
    prof = smooth_profile(params)
    orbit = SphaleronOrbit(A_eta=A, phi_eta=float(phi_eta), psi0=prof.psi0,
                           b=params.b, params=params)
    worst = orbit_residual(orbit)
    if worst > RESIDUAL_TOL:
        raise ResidualTooLarge(f"sphaleron residual {worst:.3g}")
    return orbit


def orbit_residual(orbit: SphaleronOrbit, samples: int = 257) -> float:
    """Largest mismatch between the orbit's acceleration and ``-w grad w`` over a period."""
    params, A, K = orbit.params, orbit.A_eta, orbit.K
    ts = np.linspace(0.0, orbit.period, samples)
    pos = np.array([_to_initial(params, orbit.state(t))[:2] for t in ts]).T
    w, wx, wy = waveguide_value_and_gradient(params, pos[0], pos[1])
    # the scaled acceleration (0, eta'') mapped to the initial frame
    acc = np.array([_to_initial(params, [0.0, 0.0, 0.0,
                                         -A * K**2 * np.sin(K * t + orbit.phi_eta)])[2:]
                    for t in ts]).T
    return float(np.max(np.abs(acc - np.array([-w * wx, -w * wy]))))


# ---------------------------------------------------------------------------
# linear instability

def mathieu_q(orbit: SphaleronOrbit) -> float:
    prof = smooth_profile(orbit.params)
    return float(-2 * prof.d2v(orbit.psi0) * orbit.A_eta / orbit.b)


@dataclass
class LinearMode:
    A: float
    mathieu_q: float
    s1: float
    W: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))


def _wkb_raw(q, s):
    root = np.sqrt(2 * q)
    if s >= 0:
        val, _ = quad(lambda x: np.sqrt(max(np.sin(2 * x), 0.0)), np.pi / 4, s,
                      epsabs=1e-13, epsrel=1e-12)
        return root * val
    val, _ = quad(lambda x: np.sqrt(max(-np.sin(2 * x), 0.0)), s, 0.0,
                  epsabs=1e-13, epsrel=1e-12)
    return root * val


def wkb_exponent(mode: LinearMode, s: float) -> float:
    """WKB phase of the Mathieu mode.

    For ``0 <= s`` returns ``sqrt(2q) int_{pi/4}^s sqrt(sin 2s') ds'``; for
    ``s < 0`` the growth exponent ``|W(s) - W(0)|``.

    Raises
    ------
    SmallQ
        If ``q <= 25``, where the WKB form is not trustworthy.
    """
    if mode.mathieu_q <= MIN_Q:
        raise SmallQ(f"q={mode.mathieu_q:.3g} too small for WKB")
    return float(_wkb_raw(mode.mathieu_q, s))


def linear_mode(orbit: SphaleronOrbit, s1: float = -0.5, samples: int = 65) -> LinearMode:
    """Time-symmetric Mathieu mode whose growth reaches ``-1`` at ``s = s1``.

    The amplitude ``A`` follows from
    ``A cos(W(0) - pi/4) exp(|W(s1) - W(0)|) / sqrt(|W'(s1)|) = -1``.
    """
    if not s1 < 0:
        raise InvalidParams("s1 must be negative")
    q = mathieu_q(orbit)
    mode = LinearMode(A=0.0, mathieu_q=q, s1=s1)
    w0 = wkb_exponent(mode, 0.0)
    growth = wkb_exponent(mode, s1)
    slope = np.sqrt(-2 * q * np.sin(2 * s1))
    mode.A = float(-np.sqrt(slope) * np.exp(-growth) / np.cos(w0 - np.pi / 4))
    grid = np.linspace(0.0, np.pi / 2, samples)
    mode.W = np.column_stack([grid, [wkb_exponent(mode, s) for s in grid]])
    return mode


def linear_growth(q: float, s_a: float = -0.3, s_b: float = -np.pi / 2 + 0.3):
    """Compare the growth of the linear Mathieu equation with the WKB exponent.

    Integrates ``psi'' + 2 q sin(2s) psi = 0`` backward from ``s = 0`` and
    measures ``ln|psi(s_b) / psi(s_a)|``. The points are placed
    symmetrically in the unstable window so the WKB prefactor cancels.

    Returns
    -------
    (float, float)
        Numerical and WKB log-growth between ``s_a`` and ``s_b``.
    """
    mode = LinearMode(A=0.0, mathieu_q=q, s1=s_b)

    def fun(s, u):
        return np.array([u[1], -2 * q * np.sin(2 * s) * u[0]])

    sol = integrate_ode(fun, [1.0, 0.0], (0.0, s_b), cfg=_TIGHT)
    ya = sol(s_a)[0]
    yb = sol(s_b)[0]
    numeric = float(np.log(abs(yb / ya)))
    wkb = wkb_exponent(mode, s_b) - wkb_exponent(mode, s_a)
    return numeric, float(wkb)


# ---------------------------------------------------------------------------
# reflected solution

@dataclass
class ReflectedOrbit:
    """Time-symmetric solution leaving the sphaleron toward ``xi < 0``.

    ``s`` and ``psi`` sample the escape half (``s <= s_seed``); the other
    half is its mirror image about ``s = pi/4``. ``launch`` reproduces the
    incoming free motion, reaching the symmetry point after
    ``time_to_center``.
    """

    orbit: SphaleronOrbit
    mode: LinearMode
    s_seed: float
    s: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    states: np.ndarray            # scaled 2D states along the escape half
    times: np.ndarray
    launch: LaunchSpec
    time_to_seed: float
    time_to_center: float
    xi_max: float
    touch_gap: float
    rho_max: float
    aux_energy_drift: float

    def delta_psi(self, s):
        """``psi - psi0`` on the assembled symmetric solution."""
        s = np.asarray(s, dtype=float)
        mirrored = np.where(s > np.pi / 4, np.pi / 2 - s, s)
        inside = mirrored > self.s_seed
        out = np.interp(mirrored, self.s, self.psi) - self.orbit.psi0
        # between the seeds the deviation is exponentially small
        return np.where(inside, 0.0, out)


def _seed(orbit, mode, eps):
    """Escape profile ``dpsi = -sqrt(k(s1)/k(s)) exp(-int_{s1}^s k)`` at ``dpsi = -eps``.

    ``k(s) = sqrt(-2 q sin 2s)``. Near ``s1`` this is the exponential
    ``-exp(k(s1) (s1 - s))``; the prefactor keeps the seed on the mode that
    decays toward the sphaleron, which matters once ``q`` is large.
    """
    q, s1 = mode.mathieu_q, mode.s1
    kappa = lambda s: np.sqrt(-2 * q * np.sin(2 * s))
    k1 = kappa(s1)

    def log_amp(s):
        integral, _ = quad(kappa, s1, s, epsabs=1e-13, epsrel=1e-12)
        return -integral + 0.5 * np.log(k1 / kappa(s))

    target = np.log(eps)
    # the prefactor diverges at s = 0; stay left of the minimum
    grid = np.linspace(s1, 0.0, 401)[1:-1]
    amps = np.array([log_amp(s) for s in grid])
    hi = grid[int(np.argmin(amps))]
    if amps.min() > target:
        raise InvalidParams("s1 too close to 0 for the escape asymptotics")
    s_seed = bracket_root(lambda s: log_amp(s) - target, s1, hi, RootConfig(1e-13))
    k = kappa(s_seed)
    dk = -2 * q * np.cos(2 * s_seed) / k
    dpsi = -eps
    return s_seed, orbit.psi0 + dpsi, dpsi * (-k - dk / (2 * k))


def reflected_orbit(params: ModelParams, s1: float = -0.5, A_eta: float | None = None,
                    eps: float = 1e-4, start_x: float = -5.0) -> ReflectedOrbit:
    """Construct the reflected solution from the escape asymptotics.

    The seed ``psi = psi0 - eps`` at ``s_seed > s1`` is taken from the
    exponential escape profile with ``rho = 0``. The scaled 2D equations
    are integrated backward in time until the particle leaves through the
    initial piece at ``x = start_x``; the outgoing state, reversed, is the
    incoming launch. The reduced equation for ``psi`` is integrated
    alongside to monitor the effective-potential energy near ``s1``.

    Raises
    ------
    NoEscape
        If ``psi`` stays within 2 of ``psi0`` down to ``s = -pi/2``.
    """
    orbit = build_sphaleron(params, A_eta)
    mode = linear_mode(orbit, s1)
    prof = smooth_profile(params)
    b, K, A = params.b, orbit.K, orbit.A_eta
    s_seed, psi_seed, dpsi_ds = _seed(orbit, mode, eps)

    # reduced psi equation in s
    def reduced(s, u):
        return np.array([u[1], 4.0 / b * A * np.sin(2 * s) * prof.dv(u[0])])

    def left(s, u):
        return u[0] - (orbit.psi0 - ESCAPE_DISTANCE)
    left.terminal = True

    red = integrate_ode(reduced, [psi_seed, dpsi_ds], (s_seed, -np.pi / 2),
                        events=[left], cfg=_TIGHT)
    if not red.terminated:
        raise NoEscape(f"psi stays near psi0 down to s=-pi/2 (s1={s1})")
    aux_drift = _aux_energy_drift(params, orbit, mode, red)

    # full scaled 2D dynamics, backward in time
    t_seed = float(orbit.t_of_s(s_seed))
    u_seed = np.array([psi_seed, A * np.sin(2 * s_seed) + b * prof.v(orbit.psi0),
                       dpsi_ds * K / 2, A * K * np.cos(2 * s_seed)])
    fun = scaled_field(params)

    def out(t, u):
        return _to_initial(params, u)[0] - start_x
    out.terminal = True
    out.direction = -1

    full = integrate_ode(fun, u_seed, (t_seed, t_seed - 4 * orbit.period),
                         events=[out], cfg=_TIGHT)
    if not full.terminated:
        raise NoEscape("particle did not leave through the initial piece")
    states = full.y
    exit_state = _to_initial(params, states[:, -1])
    s_path = orbit.s_of_t(full.t)

    # transverse correction while the particle is near the turn
    near = states[0] >= orbit.psi0 - ESCAPE_DISTANCE
    rho = (states[1] - orbit.eta(full.t)) / b
    rho_max = float(np.max(np.abs(rho[near])))

    launch = _incoming_launch(exit_state, start_x)
    t_center = float(orbit.t_of_s(np.pi / 4))
    return ReflectedOrbit(
        orbit=orbit, mode=mode, s_seed=float(s_seed),
        s=red.t[::-1].copy(), psi=red.y[0][::-1].copy(), dpsi=red.y[1][::-1].copy(),
        states=states, times=full.t, launch=launch,
        time_to_seed=t_seed - float(full.t[-1]),
        time_to_center=t_center - float(full.t[-1]),
        xi_max=float(b * max(np.max(states[0]), orbit.psi0)),
        touch_gap=_free_touch_gap(params, exit_state,
                                  float(orbit.t_of_s(s1)) - float(full.t[-1])),
        rho_max=rho_max, aux_energy_drift=aux_drift)


def _aux_energy_drift(params, orbit, mode, red):
    """Relative change of ``psi'^2/2 + V_eff`` for ``|s - s1| <= 0.1 sqrt(b)``."""
    prof = smooth_profile(params)
    b, A, s1 = params.b, orbit.A_eta, mode.s1
    half = 0.1 * np.sqrt(b)
    ss = np.linspace(s1 - half, s1 + half, 201)
    ss = ss[(ss <= red.t[0]) & (ss >= red.t[-1])]
    if ss.size < 2:
        return np.nan
    u = red(ss)
    veff = -4.0 / b * A * np.sin(2 * s1) * prof.v(u[0])
    e = 0.5 * u[1] ** 2 + veff
    scale = abs(4.0 / b * A * np.sin(2 * s1) * prof.v(orbit.psi0))
    return float(np.max(np.abs(e - e[0])) / scale)


def _incoming_launch(state, start_x):
    # the backward integration keeps forward-time velocities, so the state
    # at the exit point is already the incoming one
    x, y, vx, vy = state
    N = 0.5 * (y**2 + vy**2)
    E = 0.5 * vx**2 + N
    return LaunchSpec(energy=float(E), excitation=float(N),
                      phase=float(np.arctan2(y, vy)), start_x=float(start_x))


def _free_touch_gap(params, state, t_near):
    """Value of ``xi`` at the tangency of the free sinusoid through ``state``.

    The free motion of the initial piece, continued across the turn line,
    touches ``xi = 0`` exactly in the sharp limit. The local maximum of
    ``xi`` closest to ``t_near`` (time after ``state``) is returned; it
    measures the deviation at finite ``b``.
    """
    x, y, vx, vy = state
    cb, sb = np.cos(params.beta), np.sin(params.beta)

    def xi(t):
        return cb * (x + vx * t) - sb * (y * np.cos(t) + vy * np.sin(t))

    def dxi(t):
        return cb * vx - sb * (-y * np.sin(t) + vy * np.cos(t))

    t = np.linspace(0.0, t_near + 2 * np.pi, 40001)
    d = dxi(t)
    idx = np.where((d[:-1] > 0) & (d[1:] <= 0))[0]
    if idx.size == 0:
        raise NoEscape("free sinusoid has no tangency with the turn line")
    i = idx[np.argmin(np.abs(t[idx] - t_near))]
    return float(xi(bracket_root(dxi, t[i], t[i + 1], RootConfig(1e-14))))


def smooth_approach(params: ModelParams, s1: float = -0.5, A_eta: float | None = None):
    """Largest ``xi`` on the way in, from a direct integration of the launch.

    The incoming free motion of :func:`reflected_orbit` is propagated in
    the full guide until the constructed solution enters the linear regime
    near the sphaleron. Past that point integration errors grow like
    ``exp(|W(s1) - W(0)|)`` and a forward run no longer follows the
    symmetric solution.

    Returns
    -------
    (float, ReflectedOrbit)
    """
    ro = reflected_orbit(params, s1, A_eta)
    res = propagate_smooth(params, ro.launch, max_time=ro.time_to_seed)
    return res.xi_max, ro


def scaling_exponent(params: ModelParams, widths=(1e-3, 4e-3), s1: float = -0.5):
    """Power of ``b`` in the closest approach to the turn line."""
    xs = []
    for b in widths:
        p = ModelParams(beta=params.beta, alpha=params.alpha, L=params.L, b=b)
        xs.append(smooth_approach(p, s1)[0])
    return float(np.log(xs[1] / xs[0]) / np.log(widths[1] / widths[0])), xs


# ---------------------------------------------------------------------------
# nonlinear instability

@dataclass
class GrowthReport:
    delta: float
    escaped: bool
    escape_time: float
    periods: float
    region: str                 # "xi<0", "xi>0" or "bounded"
    energy_drift: float


def instability_check(params: ModelParams, A_eta: float | None = None,
                      delta: float = 1e-6, periods: int = 20) -> GrowthReport:
    """Perturb the sphaleron by ``psi -> psi0 + delta`` and follow it.

    The perturbation is applied at ``s = pi/2``, where the unstable window
    ``sin(2s) < 0`` opens, so its sign fixes the direction of escape. The
    particle counts as escaped once ``|psi - psi0| > 2``; the region is
    then decided by the sign of the deviation.

    Raises
    ------
    NoGrowth
        If a nonzero perturbation stays bounded for ``periods`` periods.
    """
    orbit = build_sphaleron(params, A_eta)
    prof = smooth_profile(params)
    t0 = float(orbit.t_of_s(np.pi / 2))
    u0 = orbit.state(t0)
    u0[0] += delta

    def away(t, u):
        return abs(u[0] - orbit.psi0) - ESCAPE_DISTANCE
    away.terminal = True

    span = periods * orbit.period
    sol = integrate_ode(scaled_field(params), u0, (t0, t0 + span), events=[away],
                        cfg=_TIGHT)
    e0 = _scaled_energy(params, prof, u0)
    drift = abs(_scaled_energy(params, prof, sol.y[:, -1]) - e0) / e0
    if not sol.terminated:
        if delta != 0:
            raise NoGrowth(f"perturbation {delta:g} bounded for {periods} periods")
        return GrowthReport(delta, False, np.inf, float(periods), "bounded", float(drift))
    t_esc = float(sol.t[-1])
    region = "xi<0" if sol.y[0, -1] < orbit.psi0 else "xi>0"
    return GrowthReport(delta, True, t_esc - t0, (t_esc - t0) / orbit.period, region,
                        float(drift))
