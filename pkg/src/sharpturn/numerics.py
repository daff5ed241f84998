"""Numerical kernels shared by the solvers.

Complex Newton iteration with finite-difference Jacobians, a bracketing
root finder, an event-aware adaptive ODE driver and a simple
natural-parameter continuation loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    BranchLost,
    EventStorm,
    NoSignChange,
    NonConvergence,
    SingularJacobian,
    SolverError,
    StepUnderflow,
)

CONDITION_LIMIT = 1e12
MAX_EVENTS = 10**6


@dataclass(frozen=True)
class RootConfig:
    residual_tolerance: float = 1e-12
    max_iterations: int = 100
    jacobian_step: float = 1e-7

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.jacobian_step > 0:
            raise ValueError("jacobian_step must be positive")


@dataclass(frozen=True)
class OdeConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    event_tolerance: float = 1e-10

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "event_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# root finding

def fd_jacobian(residual, z, f0, step):
    """Central-difference Jacobian of an analytic map.

    For a holomorphic residual a real increment gives the complex
    derivative, so one column costs two evaluations.
    """
    n = z.size
    jac = np.empty((f0.size, n), dtype=complex)
    for j in range(n):
        h = step * max(1.0, abs(z[j]))
        zp = z.copy()
        zm = z.copy()
        zp[j] += h
        zm[j] -= h
        jac[:, j] = (np.asarray(residual(zp), dtype=complex).ravel()
                     - np.asarray(residual(zm), dtype=complex).ravel()) / (2 * h)
    return jac


def complex_newton(residual: Callable, seed, cfg: RootConfig | None = None,
                   on_iterate: Callable | None = None):
    """Solve ``residual(z) = 0`` for complex ``z`` by Newton's method.

    Parameters
    ----------
    residual : callable
        Map from a complex vector (or scalar) to a complex vector of the
        same length.
    seed : complex or array_like
        Starting point.
    cfg : RootConfig, optional
    on_iterate : callable, optional
        Called as ``on_iterate(k, z, norm)`` after each evaluation.

    Returns
    -------
    complex or ndarray
        Root with the same shape as ``seed``.

    Raises
    ------
    NonConvergence
        If the residual norm does not drop below tolerance.
    SingularJacobian
        If the Jacobian condition number exceeds 1e12.
    """
    cfg = cfg or RootConfig()
    scalar = np.ndim(seed) == 0
    z = np.atleast_1d(np.asarray(seed, dtype=complex)).copy()

    def fun(v):
        out = residual(v[0] if scalar else v)
        return np.atleast_1d(np.asarray(out, dtype=complex))

    f = fun(z)
    if f.size != z.size:
        raise ValueError("residual dimension differs from unknown dimension")
    norm = np.linalg.norm(f)
    for k in range(cfg.max_iterations + 1):
        if on_iterate is not None:
            on_iterate(k, z[0] if scalar else z.copy(), norm)
        if not np.isfinite(norm):
            raise NonConvergence(f"residual became non-finite at iteration {k}")
        if norm <= cfg.residual_tolerance:
            return z[0] if scalar else z
        if k == cfg.max_iterations:
            break
        jac = fd_jacobian(fun, z, f, cfg.jacobian_step)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularJacobian(f"jacobian condition number {cond:.3g}")
        dz = np.linalg.solve(jac, -f)
        # backtrack when a full step increases the residual
        lam = 1.0
        for _ in range(30):
            z_new = z + lam * dz
            f_new = fun(z_new)
            n_new = np.linalg.norm(f_new)
            if np.isfinite(n_new) and n_new < norm:
                break
            lam *= 0.5
        else:
            raise NonConvergence(
                f"newton stagnated at residual {norm:.3g} (iteration {k})")
        z, f, norm = z_new, f_new, n_new
    raise NonConvergence(
        f"residual {norm:.3g} above tolerance {cfg.residual_tolerance:.3g} "
        f"after {cfg.max_iterations} iterations")


def bracket_root(f: Callable[[float], float], lo: float, hi: float,
                 cfg: RootConfig | None = None) -> float:
    """Find a root of ``f`` inside ``[lo, hi]``.

    Secant steps are taken while they stay inside the bracket and shrink
    it fast enough; otherwise the interval is bisected.

    Raises
    ------
    NoSignChange
        If ``f(lo)`` and ``f(hi)`` do not differ in sign.
    """
    cfg = cfg or RootConfig()
    tol = cfg.residual_tolerance
    a, b = sorted((float(lo), float(hi)))
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if not fa * fb < 0:
        raise NoSignChange(f"f({a})={fa:.3g} and f({b})={fb:.3g} have the same sign")
    for _ in range(max(cfg.max_iterations, 200)):
        width = b - a
        x = b - fb * (b - a) / (fb - fa)
        # fall back to bisection if the secant point hugs an end
        margin = 0.05 * width
        if not (a + margin < x < b - margin):
            x = 0.5 * (a + b)
        fx = f(x)
        if fx == 0 or abs(fx) <= tol:
            return x
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        if b - a <= tol or np.nextafter(a, b) >= b:
            # width target met, or no representable point left inside
            return a if abs(fa) < abs(fb) else b
    raise NonConvergence("bracket_root did not converge")


# ---------------------------------------------------------------------------
# ODE integration

@dataclass
class EventRecord:
    index: int
    t: float
    y: np.ndarray


@dataclass
class OdeSolution:
    t: np.ndarray
    y: np.ndarray
    events: list = field(default_factory=list)
    dense: object = None
    terminated: bool = False

    def __call__(self, t):
        return self.dense(t)


def integrate_ode(fun: Callable, initial, t_span: Sequence[float],
                  events: Sequence[Callable] = (), cfg: OdeConfig | None = None,
                  t_eval=None) -> OdeSolution:
    """Integrate ``y' = fun(t, y)`` with an embedded 8(5,3) Runge-Kutta pair.

    Each event is a scalar function ``g(t, y)``; sign changes are located on
    the dense-output interpolant and recorded with the interpolated state.
    An event carrying ``terminal = True`` stops the integration and one
    carrying ``direction`` filters crossings, as in :func:`scipy.integrate.solve_ivp`.

    Raises
    ------
    StepUnderflow
        If the step size collapses below 1e-14 of the span.
    EventStorm
        If more than 10**6 events fire.
    """
    cfg = cfg or OdeConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = abs(t1 - t0)
    min_step = 1e-14 * span
    res = solve_ivp(fun, (t0, t1), np.asarray(initial, dtype=float),
                    method="DOP853", rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=cfg.max_step, events=list(events) or None,
                    dense_output=True, t_eval=t_eval)
    if res.status == -1:
        if "step size" in res.message.lower():
            raise StepUnderflow(res.message)
        raise SolverError(res.message)
    if len(res.t) > 2:
        steps = np.abs(np.diff(res.t))
        if steps[:-1].size and steps[:-1].min() < min_step:
            raise StepUnderflow(f"step {steps[:-1].min():.3g} below {min_step:.3g}")
    records = []
    if events:
        total = sum(len(te) for te in res.t_events)
        if total > MAX_EVENTS:
            raise EventStorm(f"{total} events fired")
        for i, (te, ye) in enumerate(zip(res.t_events, res.y_events)):
            for t, y in zip(te, ye):
                records.append(EventRecord(i, float(t), np.array(y)))
        records.sort(key=lambda r: r.t if t1 >= t0 else -r.t)
    return OdeSolution(t=res.t, y=res.y, events=records, dense=res.sol,
                       terminated=res.status == 1)


# ---------------------------------------------------------------------------
# continuation

def continuation_scan(solver: Callable, grid: Sequence[float], initial_seed,
                      recoverable=(SolverError, FloatingPointError)):
    """Follow a solution family along a parameter grid.

    Parameters
    ----------
    solver : callable
        ``solver(parameter, seed) -> solution``; raises on failure.
    grid : sequence of float
        Monotone parameter values.
    initial_seed
        Seed for the first grid point.

    Returns
    -------
    list of (parameter, solution)

    Raises
    ------
    BranchLost
        When the solver fails at a grid point even after one halving of the
        parameter step. ``partial`` holds the samples obtained so far.
    """
    grid = list(grid)
    if len(grid) > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
    out = []
    seed = initial_seed
    prev = None
    for p in grid:
        try:
            sol = solver(p, seed)
        except recoverable as exc:
            if prev is None:
                raise BranchLost(p, out, exc) from exc
            try:
                mid = solver(0.5 * (prev + p), seed)
                sol = solver(p, mid)
            except recoverable as exc2:
                raise BranchLost(p, out, exc2) from exc2
        out.append((p, sol))
        seed = sol
        prev = p
    return out
