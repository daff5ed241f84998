"""Waveguide geometry: model parameters, coordinate frames and the valley function.

The potential is ``U = w(x, y)**2 / 2``. A two-turn guide is built from
three straight pieces: the initial frame ``(x, y)``, the intermediate
frame ``(x', y')`` rotated by ``alpha`` and the final frame ``(xi, eta)``
rotated by a further ``beta`` about the point ``x' = L``. The single-turn
guide is the ``alpha = 0``, ``L = 0`` case in which the intermediate
segment collapses.

All lengths are measured in units of ``L`` for two turns, so ``L = 1``
unless a caller deliberately works in other units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConfigError, InvalidFrame, InvalidParams, SharpModel
from .numerics import RootConfig, bracket_root


@dataclass(frozen=True)
class ModelParams:
    """Geometry of the guide.

    Parameters
    ----------
    beta : float
        Angle of the second (or only) turn, radians.
    alpha : float
        Angle of the first turn; 0 gives the single-turn model.
    L : float
        Length of the intermediate segment. Must be positive for two
        turns; the single-turn model uses ``L = 0``.
    b : float
        Smoothening width; 0 means sharp turns.
    """

    beta: float
    alpha: float = 0.0
    L: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if not 0 < self.beta < np.pi / 2:
            raise InvalidParams(f"beta={self.beta} outside (0, pi/2)")
        if not 0 <= self.alpha < self.beta:
            raise InvalidParams(f"alpha={self.alpha} outside [0, beta)")
        if self.L < 0 or (self.L == 0 and self.alpha != 0):
            raise InvalidParams(f"L={self.L} must be positive for two turns")
        if self.b < 0:
            raise InvalidParams(f"b={self.b} is negative")

    @classmethod
    def one_turn(cls, beta, b=0.0):
        return cls(beta=beta, alpha=0.0, L=0.0, b=b)

    @property
    def is_one_turn(self):
        return self.alpha == 0 and self.L == 0

    @property
    def sharp(self):
        return self.b == 0

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "L": self.L, "b": self.b}


def load_params(path) -> ModelParams:
    """Read model parameters from a JSON file with keys alpha, beta, L, b."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return params_from_mapping(data)


def params_from_mapping(data) -> ModelParams:
    if not isinstance(data, dict) or "beta" not in data:
        raise ConfigError("model configuration needs at least 'beta'")
    unknown = set(data) - {"alpha", "beta", "L", "b"}
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}")
    try:
        alpha = float(data.get("alpha", 0.0))
        L = float(data.get("L", 0.0 if alpha == 0 else 1.0))
        return ModelParams(beta=float(data["beta"]), alpha=alpha, L=L,
                           b=float(data.get("b", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


class Frame(Enum):
    INITIAL = "initial"
    INTERMEDIATE = "intermediate"
    FINAL = "final"


def _rot(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def transform_frame(params: ModelParams, position, velocity, src: Frame, dst: Frame):
    """Express a point and a velocity in another frame.

    Positions are rotated (and shifted by ``L`` along ``x'`` when entering
    the final frame); velocities are only rotated.

    Returns
    -------
    (ndarray, ndarray)
        Position and velocity in ``dst``.
    """
    src, dst = Frame(src), Frame(dst)
    if params.is_one_turn and Frame.INTERMEDIATE in (src, dst) and src != dst:
        raise InvalidFrame("single-turn model has no intermediate frame")
    pos = np.asarray(position, dtype=float)
    vel = np.asarray(velocity, dtype=float)
    order = [Frame.INITIAL, Frame.INTERMEDIATE, Frame.FINAL]
    i, j = order.index(src), order.index(dst)
    shift = np.array([params.L, 0.0])
    ra, rb = _rot(params.alpha), _rot(-params.beta)
    while i < j:
        if i == 0:
            pos, vel = ra @ pos, ra @ vel
        else:
            pos, vel = rb @ (pos - shift), rb @ vel
        i += 1
    while i > j:
        if i == 2:
            pos, vel = rb.T @ pos + shift, rb.T @ vel
        else:
            pos, vel = ra.T @ pos, ra.T @ vel
        i -= 1
    return pos, vel


def frames(params: ModelParams, x, y):
    """Return ``(x', y', xi, eta)`` for arrays of initial-frame points."""
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    cb, sb = np.cos(params.beta), np.sin(params.beta)
    xp = ca * x + sa * y
    yp = -sa * x + ca * y
    xi = cb * (xp - params.L) - sb * yp
    eta = sb * (xp - params.L) + cb * yp
    return xp, yp, xi, eta


def step(u, b):
    """Heaviside step, or its logistic smoothening of width ``b``."""
    if b == 0:
        return np.heaviside(u, 0.5)
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(u) / b))


def _step_prime(u, b):
    if b == 0:
        return np.zeros_like(np.asarray(u, dtype=float))
    s = step(u, b)
    return s * (1 - s) / b


def waveguide_value(params: ModelParams, x, y):
    """Valley function ``w(x, y)``; the potential is ``w**2 / 2``.

    Works elementwise on arrays.
    """
    return waveguide_value_and_gradient(params, x, y)[0]


def waveguide_value_and_gradient(params: ModelParams, x, y):
    """Return ``(w, dw/dx, dw/dy)``.

    Three pieces are blended with step functions across the lines
    ``x' = 0`` and ``xi = 0``:
    ``w = H(-x')H(-xi) y + H(x')H(-xi) y' cos(a) + H(xi) eta cos(a) cos(b)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b = params.alpha, params.beta
    ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
    xp, yp, xi, eta = frames(params, x, y)
    h = params.b
    s1, s1p = step(xp, h), _step_prime(xp, h)
    s2, s2p = step(xi, h), _step_prime(xi, h)
    if params.is_one_turn:
        # no intermediate piece: the x' = 0 line passes through the corner
        s1 = np.zeros_like(s1)
        s1p = np.zeros_like(s1p)
    p1, p2, p3 = y, yp * ca, eta * ca * cb
    w = (1 - s1) * (1 - s2) * p1 + s1 * (1 - s2) * p2 + s2 * p3

    # gradients of the frame coordinates
    dxp = np.array([ca, sa])
    dyp = np.array([-sa, ca])
    dxi = cb * dxp - sb * dyp
    deta = sb * dxp + cb * dyp
    grads = []
    for k in range(2):
        dp1 = 1.0 if k == 1 else 0.0
        dp2 = dyp[k] * ca
        dp3 = deta[k] * ca * cb
        ds1 = s1p * dxp[k]
        ds2 = s2p * dxi[k]
        g = ((1 - s1) * (1 - s2) * dp1 + s1 * (1 - s2) * dp2 + s2 * dp3
             - ds1 * (1 - s2) * p1 - (1 - s1) * ds2 * p1
             + ds1 * (1 - s2) * p2 - s1 * ds2 * p2
             + ds2 * p3)
        grads.append(g)
    return w, grads[0], grads[1]


@dataclass(frozen=True)
class SmoothProfile:
    """Profile of the smoothened turn in scaled coordinates ``psi = xi / b``.

    Near the line ``xi = 0`` the valley function of the single turn reads
    ``w = cos(beta) * (eta - b * v(psi))``.
    """

    beta: float
    psi0: float
    v: Callable
    dv: Callable
    d2v: Callable


def smooth_profile(params: ModelParams) -> SmoothProfile:
    """Build ``v(psi) = psi tan(beta) / (1 + exp(psi))`` and its stationary point.

    Raises
    ------
    SharpModel
        If ``params.b == 0``.
    """
    if params.b == 0:
        raise SharpModel("smooth profile requires b > 0")
    tb = np.tan(params.beta)

    def sig(psi):
        # 1 / (1 + e^psi), written to avoid overflow
        return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(psi, dtype=float)))

    def v(psi):
        return tb * psi * sig(psi)

    def dv(psi):
        s = sig(psi)
        return tb * (s - psi * s * (1 - s))

    def d2v(psi):
        s = sig(psi)
        return tb * (-2 * s * (1 - s) + psi * s * (1 - s) * (1 - 2 * s))

    psi0 = bracket_root(lambda p: float(dv(p)), 0.5, 2.0, RootConfig(residual_tolerance=1e-15))
    return SmoothProfile(beta=params.beta, psi0=psi0, v=v, dv=dv, d2v=d2v)
