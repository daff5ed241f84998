"""Real classical motion in sharp and smoothened waveguides.

In a sharp guide each straight piece is a free particle along the piece
and a harmonic oscillator across it, so a trajectory is a chain of
analytic segments. A segment meets a straight gluing line when

    g(t) = A + B t + C cos(w t) + D sin(w t)

vanishes. The critical points of ``g`` are known in closed form, so ``g``
is monotone between consecutive ones and the first root is bracketed
exactly.

A trajectory counts as reflected when it touches the second turn line
tangentially: at finite smoothening such trajectories turn back, while
crossing trajectories leave through the final piece for good.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NonSharp, NoReflectionFound, SharpModel, SolverError
from .geometry import ModelParams, smooth_profile, waveguide_value_and_gradient
from .numerics import OdeConfig, integrate_ode

DEFAULT_MAX_TIME = 1e4
TANGENCY_FACTOR = 1e-6
TOUCH_TOLERANCE = 1e-10


class Region(Enum):
    INITIAL = "initial"
    INTERMEDIATE = "intermediate"
    FINAL = "final"


class Outcome(Enum):
    REFLECTED = "Reflected"
    TRANSMITTED = "Transmitted"
    UNDECIDED = "Undecided"


@dataclass
class ClassicalState:
    region: Region
    position: np.ndarray
    velocity: np.ndarray
    time: float


@dataclass
class TrajectoryOutcome:
    kind: Outcome
    touch_events: list
    final_state: ClassicalState
    xi_max: float = -np.inf
    trajectory: object = None
    energy_drift: float = 0.0


@dataclass(frozen=True)
class LaunchSpec:
    """Asymptotic initial data in the first straight piece.

    At ``t = 0`` the particle sits at ``x = start_x`` with
    ``y = sqrt(2N) sin(phase)`` and ``ydot = sqrt(2N) cos(phase)``.
    """

    energy: float
    excitation: float
    phase: float = 0.0
    start_x: float = -5.0

    def __post_init__(self):
        if not self.energy > 0:
            raise ValueError("energy must be positive")
        if not 0 <= self.excitation <= self.energy:
            raise ValueError("excitation must lie in [0, energy]")
        if self.start_x > -5:
            raise ValueError("start_x must be <= -5")

    def state(self):
        amp = np.sqrt(2 * self.excitation)
        p0 = np.sqrt(2 * (self.energy - self.excitation))
        pos = np.array([self.start_x, amp * np.sin(self.phase)])
        vel = np.array([p0, amp * np.cos(self.phase)])
        return pos, vel


# ---------------------------------------------------------------------------
# frames and lines

def _frame_maps(params: ModelParams):
    """Rotation matrices and origins of the three piece frames.

    A point with initial coordinates ``r`` has frame coordinates
    ``R @ (r - o)``.
    """
    a, b = params.alpha, params.beta
    ra = np.array([[np.cos(a), np.sin(a)], [-np.sin(a), np.cos(a)]])
    rb = np.array([[np.cos(b), -np.sin(b)], [np.sin(b), np.cos(b)]])
    corner = ra.T @ np.array([params.L, 0.0])
    return {
        Region.INITIAL: (np.eye(2), np.zeros(2)),
        Region.INTERMEDIATE: (ra, np.zeros(2)),
        Region.FINAL: (rb @ ra, corner),
    }


def _frequency(params: ModelParams, region: Region):
    ca, cb = np.cos(params.alpha), np.cos(params.beta)
    return {Region.INITIAL: 1.0, Region.INTERMEDIATE: ca,
            Region.FINAL: ca * cb}[region]


# Gluing lines as (unit normal, offset) in initial coordinates: n . r + c.
def _lines(params: ModelParams):
    a, b = params.alpha, params.beta
    first = (np.array([np.cos(a), np.sin(a)]), 0.0)
    second = (np.array([np.cos(a - b), np.sin(a - b)]), -np.cos(b) * params.L)
    return first, second


def region_of(params: ModelParams, position):
    (n1, c1), (n2, c2) = _lines(params)
    if n2 @ position + c2 > 0:
        return Region.FINAL
    if params.is_one_turn or n1 @ position + c1 < 0:
        return Region.INITIAL
    return Region.INTERMEDIATE


# ---------------------------------------------------------------------------
# first root of A + B t + C cos(w t) + D sin(w t)

def first_contact(A, B, C, D, omega, t_max, tangency_tol=0.0):
    """Earliest root of ``g(t) = A + B t + C cos(wt) + D sin(wt)`` on ``(0, t_max]``.

    Vectorized over the coefficient arrays. Rows are assumed to start with
    ``g(0) < 0``.

    Returns
    -------
    t_root : ndarray
        Root time, ``inf`` where no root exists before ``t_max``.
    tangent : ndarray of bool
        Whether the normal velocity at the root is below ``tangency_tol``.
    margin : ndarray
        Largest local maximum of ``g`` strictly before the root (``-inf``
        when there is none). A value close to zero from below means a near
        touch.
    """
    A, B, C, D = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (A, B, C, D))
    A, B, C, D = np.broadcast_arrays(A, B, C, D)
    n = A.shape[0]
    R = np.hypot(C, D)
    delta = np.arctan2(D, C)

    # beyond this time the linear trend keeps g away from zero
    with np.errstate(divide="ignore", invalid="ignore"):
        horizon = np.where(B > 0, (R - A) / B, np.inf)
    # g(horizon) >= 0 in exact arithmetic; pad so rounding cannot lose it
    horizon = horizon + 1e-12 * np.abs(horizon) + 1e-300
    horizon = np.minimum(horizon, t_max)
    horizon = np.where((B <= 0) & (A + R < 0), 0.0, horizon)

    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(R > 0, B / (R * omega), np.inf)
    has_crit = np.abs(s) < 1
    th1 = np.arcsin(np.clip(s, -1, 1))       # local maxima of g
    th2 = np.pi - th1                          # local minima of g
    finite_h = horizon[np.isfinite(horizon)]
    span = finite_h.max() if finite_h.size else 0.0
    K = int(np.ceil(omega * span / (2 * np.pi))) + 2
    m0 = np.floor(-(th1 + delta) / (2 * np.pi))
    ms = m0[:, None] + np.arange(K + 1)[None, :]
    t_max_nodes = (th1[:, None] + delta[:, None] + 2 * np.pi * ms) / omega
    t_min_nodes = (th2[:, None] + delta[:, None] + 2 * np.pi * ms) / omega
    nodes = np.concatenate([t_max_nodes, t_min_nodes], axis=1)
    is_max = np.concatenate([np.ones_like(t_max_nodes, bool),
                             np.zeros_like(t_min_nodes, bool)], axis=1)
    valid = has_crit[:, None] & (nodes > 0) & (nodes < horizon[:, None])
    nodes = np.where(valid, nodes, np.inf)
    # the horizon closes the last monotone stretch
    nodes = np.concatenate([nodes, horizon[:, None]], axis=1)
    is_max = np.concatenate([is_max, np.zeros((n, 1), bool)], axis=1)
    order = np.argsort(nodes, axis=1, kind="stable")
    nodes = np.take_along_axis(nodes, order, axis=1)
    is_max = np.take_along_axis(is_max, order, axis=1)

    tn = np.where(np.isfinite(nodes), nodes, 0.0)
    gn = A[:, None] + B[:, None] * tn + R[:, None] * np.cos(omega * tn - delta[:, None])
    gn = np.where(np.isfinite(nodes), gn, -np.inf)
    hit = gn >= 0
    any_hit = hit.any(axis=1)
    j = np.argmax(hit, axis=1)
    rows = np.arange(n)

    # margin: largest local max strictly before the bracketing node
    idx = np.arange(nodes.shape[1])[None, :]
    before = idx < j[:, None]
    before = np.where(any_hit[:, None], before, np.isfinite(nodes))
    cand = np.where(before & is_max, gn, -np.inf)
    margin = cand.max(axis=1) if cand.shape[1] else np.full(n, -np.inf)

    lo = np.where(j > 0, tn[rows, np.maximum(j - 1, 0)], 0.0)
    hi = tn[rows, j]
    t_root = np.full(n, np.inf)
    tangent = np.zeros(n, bool)
    if any_hit.any():
        a_, b_ = lo[any_hit], hi[any_hit]
        Ah, Bh, Rh, dh = A[any_hit], B[any_hit], R[any_hit], delta[any_hit]
        for _ in range(200):
            mid = 0.5 * (a_ + b_)
            gm = Ah + Bh * mid + Rh * np.cos(omega * mid - dh)
            up = gm >= 0
            b_ = np.where(up, mid, b_)
            a_ = np.where(up, a_, mid)
            if np.all(b_ - a_ <= 4 * np.finfo(float).eps * np.maximum(1, np.abs(b_))):
                break
        t_root[any_hit] = b_
        gdot = Bh - Rh * omega * np.sin(omega * b_ - dh)
        tangent[any_hit] = np.abs(gdot) < tangency_tol
    return t_root, tangent, margin


# ---------------------------------------------------------------------------
# sharp propagation

def _segment_line_coeffs(params, region, origin_state, line, sign):
    """Coefficients of ``sign * (n . r + c)`` along the analytic segment."""
    R, o = _frame_maps(params)[region]
    omega = _frequency(params, region)
    pos, vel = origin_state
    u0, v0 = R @ (pos - o)
    pu, pv = R @ vel
    n, c = line
    mu, mv = R @ n
    A = sign * (n @ o + c + mu * u0)
    B = sign * mu * pu
    C = sign * mv * v0
    D = sign * mv * pv / omega
    return A, B, C, D, omega


def _advance(params, region, state, t):
    R, o = _frame_maps(params)[region]
    omega = _frequency(params, region)
    pos, vel = state
    u0, v0 = R @ (pos - o)
    pu, pv = R @ vel
    u = u0 + pu * t
    v = v0 * np.cos(omega * t) + pv / omega * np.sin(omega * t)
    du = pu
    dv = -v0 * omega * np.sin(omega * t) + pv * np.cos(omega * t)
    return R.T @ np.array([u, v]) + o, R.T @ np.array([du, dv])


def propagate_sharp(params: ModelParams, launch: LaunchSpec,
                    max_time: float = DEFAULT_MAX_TIME) -> TrajectoryOutcome:
    """Follow the exact piecewise solution through a sharp guide.

    Touching the second turn line (a crossing with normal velocity below
    ``1e-6 sqrt(2E)``, or a local approach within ``1e-10`` that does not
    cross) ends the run as ``Reflected``. The returned final state is then
    the time-reversed image of the launch, which is where the symmetric
    reflected solution arrives after twice the touch time. Crossing the
    line ends the run as ``Transmitted``.

    Raises
    ------
    NonSharp
        If ``params.b != 0``.
    """
    if params.b != 0:
        raise NonSharp("propagate_sharp needs b = 0")
    E = launch.energy
    tol_v = TANGENCY_FACTOR * np.sqrt(2 * E)
    pos, vel = launch.state()
    region = region_of(params, pos)
    t = 0.0
    touches = []
    first, second = _lines(params)
    while t < max_time:
        if region is Region.FINAL:
            _, (n2, _) = _lines(params)
            if n2 @ vel >= 0:
                return TrajectoryOutcome(Outcome.TRANSMITTED, touches,
                                         ClassicalState(region, pos, vel, t))
        candidates = []
        if region is Region.INITIAL:
            if not params.is_one_turn:
                candidates.append((first, 1.0, "first"))
            candidates.append((second, 1.0, "second"))
        elif region is Region.INTERMEDIATE:
            candidates.append((first, -1.0, "first"))
            candidates.append((second, 1.0, "second"))
        best = None
        for line, sign, name in candidates:
            A, B, C, D, om = _segment_line_coeffs(params, region, (pos, vel), line, sign)
            tr, tang, marg = first_contact(A, B, C, D, om, max_time - t, tol_v)
            tr, tang, marg = tr[0], tang[0], marg[0]
            if name == "second" and marg >= -TOUCH_TOLERANCE and (best is None or True):
                touch = _touch_time(A, B, C, D, om, tr)
                if touch is not None:
                    tp, _ = _advance(params, region, (pos, vel), touch)
                    touches.append((t + touch, tp))
                    return _reflected(launch, touches, t + touch)
            if np.isfinite(tr) and (best is None or tr < best[0]):
                best = (tr, tang, name)
        if best is None:
            pos, vel = _advance(params, region, (pos, vel), max_time - t)
            t = max_time
            break
        dt, tang, name = best
        pos, vel = _advance(params, region, (pos, vel), dt)
        t += dt
        touches.append((t, pos.copy()))
        if name == "second":
            if tang:
                return _reflected(launch, touches, t)
            region = Region.FINAL
        else:
            region = Region.INTERMEDIATE if region is Region.INITIAL else Region.INITIAL
    if region is Region.INITIAL and vel[0] < 0:
        return TrajectoryOutcome(Outcome.REFLECTED, touches, ClassicalState(region, pos, vel, t))
    return TrajectoryOutcome(Outcome.UNDECIDED, touches, ClassicalState(region, pos, vel, t))


def _touch_time(A, B, C, D, omega, t_root):
    """Time of the local maximum of ``g`` that comes within tolerance of zero."""
    R = np.hypot(C, D)
    delta = np.arctan2(D, C)
    if R == 0 or abs(B) >= R * omega:
        return None
    th = np.arcsin(B / (R * omega))
    m = np.floor(-(th + delta) / (2 * np.pi))
    limit = t_root if np.isfinite(t_root) else np.inf
    while True:
        tk = (th + delta + 2 * np.pi * m) / omega
        if tk > limit:
            return None
        if tk > 0:
            g = A + B * tk + R * np.cos(omega * tk - delta)
            if -TOUCH_TOLERANCE <= g <= TOUCH_TOLERANCE:
                return tk
        m += 1


def _reflected(launch, touches, t_touch):
    pos, vel = launch.state()
    final = ClassicalState(Region.INITIAL, pos, -vel, 2 * t_touch)
    return TrajectoryOutcome(Outcome.REFLECTED, touches, final, xi_max=0.0)


# ---------------------------------------------------------------------------
# smooth guides

def _xi_of(params: ModelParams, x, y):
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    xp = ca * x + sa * y
    yp = -sa * x + ca * y
    return cb * (xp - params.L) - sb * yp


def smooth_field(params: ModelParams):
    """Right-hand side of ``r'' = -w grad w`` for the state ``(x, y, vx, vy)``."""
    def field(t, u):
        w, wx, wy = waveguide_value_and_gradient(params, u[0], u[1])
        return np.array([u[2], u[3], -w * wx, -w * wy])
    return field


def smooth_energy(params: ModelParams, u):
    w = waveguide_value_and_gradient(params, u[0], u[1])[0]
    return 0.5 * (u[2] ** 2 + u[3] ** 2) + 0.5 * w**2


def propagate_smooth(params: ModelParams, launch: LaunchSpec,
                     max_time: float = DEFAULT_MAX_TIME,
                     cfg: OdeConfig | None = None, initial_state=None) -> TrajectoryOutcome:
    """Integrate the equations of motion in a smoothened guide.

    The run ends as ``Transmitted`` once ``xi`` exceeds ``|start_x|`` while
    growing, and as ``Reflected`` once ``x`` drops below ``start_x`` while
    decreasing. Otherwise it is ``Undecided`` at ``max_time``.

    Parameters
    ----------
    initial_state : array_like, optional
        ``(x, y, vx, vy)`` overriding the state built from ``launch``; the
        launch then only supplies ``start_x`` for the exit tests.

    Returns
    -------
    TrajectoryOutcome
        ``xi_max`` is the largest ``xi`` reached, refined on the dense
        output; ``touch_events`` lists crossings of ``xi = 0`` as
        ``(t, position)``; ``trajectory`` is the :class:`OdeSolution`.

    Raises
    ------
    SharpModel
        If ``params.b == 0``.
    StepUnderflow
        Propagated from the integrator.
    """
    if params.b == 0:
        raise SharpModel("propagate_smooth needs b > 0")
    cfg = cfg or OdeConfig(max_step=0.1)
    if initial_state is None:
        pos, vel = launch.state()
        u0 = np.concatenate([pos, vel])
    else:
        u0 = np.asarray(initial_state, dtype=float)
    exit_dist = abs(launch.start_x)

    def transmitted(t, u):
        return _xi_of(params, u[0], u[1]) - exit_dist
    transmitted.terminal = True
    transmitted.direction = 1

    def reflected(t, u):
        return u[0] - launch.start_x
    reflected.terminal = True
    reflected.direction = -1

    def crossing(t, u):
        return _xi_of(params, u[0], u[1])

    sol = integrate_ode(smooth_field(params), u0, (0.0, max_time),
                        events=[transmitted, reflected, crossing], cfg=cfg)
    touches = [(r.t, r.y[:2].copy()) for r in sol.events if r.index == 2]
    end = sol.y[:, -1]
    kind = Outcome.UNDECIDED
    for r in sol.events:
        if r.index == 0:
            kind = Outcome.TRANSMITTED
        elif r.index == 1:
            kind = Outcome.REFLECTED
    region = region_of(params, end[:2])
    e0 = smooth_energy(params, u0)
    drift = abs(smooth_energy(params, end) - e0) / e0
    return TrajectoryOutcome(kind, touches,
                             ClassicalState(region, end[:2].copy(), end[2:].copy(), float(sol.t[-1])),
                             xi_max=_refined_xi_max(params, sol), trajectory=sol,
                             energy_drift=float(drift))


def _refined_xi_max(params, sol):
    xi = _xi_of(params, sol.y[0], sol.y[1])
    i = int(np.argmax(xi))
    lo = sol.t[max(i - 1, 0)]
    hi = sol.t[min(i + 1, len(sol.t) - 1)]
    if hi <= lo:
        return float(xi[i])
    ts = np.linspace(lo, hi, 401)
    u = sol(ts)
    return float(max(xi[i], np.max(_xi_of(params, u[0], u[1]))))


# ---------------------------------------------------------------------------
# brute-force boundary oracle

def touch_margin(params: ModelParams, energy: float, excitation: float, phases,
                 start_x: float = -5.0):
    """Closest approach to the second turn line before the first crossing.

    For each launch phase returns the largest local maximum of the signed
    distance to the line ``xi = 0`` reached before the trajectory first
    crosses it (``-inf`` if the first approach is already a crossing). A
    touching trajectory, and hence a reflected one, exists iff the
    supremum over phases reaches zero.
    """
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    E, N = energy, excitation
    amp = np.sqrt(2 * N)
    p0 = np.sqrt(2 * (E - N))
    first, second = _lines(params)
    n2, c2 = second
    # initial piece: x = start_x + p0 t, y = amp sin(t + phase)
    v0 = amp * np.sin(phases)
    pv = amp * np.cos(phases)
    A2 = n2[0] * start_x + c2 + 0 * phases
    t_lim = DEFAULT_MAX_TIME
    if params.is_one_turn:
        _, _, margin = first_contact(A2, n2[0] * p0, n2[1] * v0, n2[1] * pv, 1.0, t_lim)
        return margin
    n1, _ = first
    t1, _, _ = first_contact(n1[0] * start_x + 0 * phases, n1[0] * p0,
                             n1[1] * v0, n1[1] * pv, 1.0, t_lim)
    _, _, m_init = first_contact(A2, n2[0] * p0, n2[1] * v0, n2[1] * pv, 1.0, t1)
    # state on the first turn line, in intermediate coordinates
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    x = start_x + p0 * t1
    y = amp * np.sin(t1 + phases)
    vx = p0
    vy = amp * np.cos(t1 + phases)
    yp = -sa * x + ca * y
    vxp = ca * vx + sa * vy
    vyp = -sa * vx + ca * vy
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    _, _, m_mid = first_contact(-cb * params.L + 0 * phases, cb * vxp, -sb * yp,
                                -sb * vyp / ca, ca, t_lim)
    return np.maximum(m_init, m_mid)


def max_touch_margin(params, energy, excitation, phase_samples=2000, start_x=-5.0,
                     refine=4, zoom_points=21, zoom_levels=14):
    return touching_phase(params, energy, excitation, phase_samples, start_x,
                          refine, zoom_points, zoom_levels)[0]


def touching_phase(params, energy, excitation, phase_samples=2000, start_x=-5.0,
                   refine=4, zoom_points=21, zoom_levels=14):
    """Supremum over launch phases of :func:`touch_margin` and the phase attaining it.

    A uniform phase grid is scanned and the best few cells are refined by
    repeated local resampling. The margin may jump down where a local
    maximum starts to cross the line, so a derivative-free zoom is used
    rather than a smooth optimizer.
    """
    phases = 2 * np.pi * np.arange(phase_samples) / phase_samples
    m = touch_margin(params, energy, excitation, phases, start_x)
    best = float(np.max(m))
    best_phase = float(phases[int(np.argmax(m))])
    h = 2 * np.pi / phase_samples
    order = np.argsort(m)[::-1]
    done = []
    for i in order:
        if len(done) >= refine or not np.isfinite(m[i]):
            break
        if any(min(abs(i - k), phase_samples - abs(i - k)) <= 1 for k in done):
            continue
        done.append(i)
        center, width = phases[i], h
        for _ in range(zoom_levels):
            trial = center + np.linspace(-width, width, zoom_points)
            mt = touch_margin(params, energy, excitation, trial, start_x)
            k = int(np.argmax(mt))
            if not np.isfinite(mt[k]):
                break
            if mt[k] > best:
                best, best_phase = float(mt[k]), float(trial[k])
            center = trial[k]
            width *= 2.0 / (zoom_points - 1)
    return best, best_phase


def reflection_exists(params, energy, excitation, phase_samples=2000,
                      start_x=-5.0, touch_tol=1e-9) -> bool:
    return max_touch_margin(params, energy, excitation, phase_samples, start_x) >= -touch_tol


def oracle_boundary(params: ModelParams, energy: float, phase_samples: int = 2000,
                    n_tolerance: float | None = None, start_x: float = -5.0) -> float:
    """Smallest excitation ``N`` at which a touching (reflected) trajectory exists.

    Bisection over ``N``; each trial scans the launch phase. This uses only
    direct propagation and serves as an independent check of the analytic
    boundary.

    Raises
    ------
    NonSharp
        If ``params.b != 0``.
    NoReflectionFound
        If no reflection exists even for ``N`` close to ``E``.
    """
    if params.b != 0:
        raise NonSharp("oracle needs a sharp guide")
    if phase_samples < 1000:
        raise ValueError("phase_samples must be at least 1000")
    E = energy
    tol = n_tolerance if n_tolerance is not None else 1e-6 * E
    lo, hi = 0.0, E * (1 - 1e-3)
    if reflection_exists(params, E, lo, phase_samples, start_x):
        return 0.0
    if not reflection_exists(params, E, hi, phase_samples, start_x):
        raise NoReflectionFound(f"no touching trajectory at E={E} for N < E")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reflection_exists(params, E, mid, phase_samples, start_x):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
