"""Acceptance checks run by ``sharpturn validate``.

Each check returns a :class:`CheckResult` with the measured quantities,
the threshold it was held to and the wall time it took.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import classical, one_turn, sphaleron, two_turn_boundary, two_turn_tunneling as tun
from .geometry import ModelParams

BETA = np.pi / 3
ALPHA = np.pi / 30


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"criterion {self.number} ({self.name}): {'PASS' if self.passed else 'FAIL'}"

    def to_dict(self):
        return asdict(self)


def _timed(number, name, fn):
    t = time.perf_counter()
    passed, details = fn()
    return CheckResult(number, name, bool(passed), details, time.perf_counter() - t)


def check_one_turn():
    exact = 2 * np.log(3) - 2
    closed = one_turn.suppression_closed_form(BETA, 0.0)
    matched = one_turn.solve_matching(BETA, 0.0).f
    ncr = one_turn.nu_critical(BETA)
    err = max(abs(closed - exact), abs(matched - exact), abs(closed - matched))
    return err <= 1e-9 and abs(ncr - 0.25) <= 1e-15, {
        "f_closed": closed, "f_matching": matched, "max_error": err, "nu_cr": ncr}


def check_identities(points=50, energy=1.0):
    nus = np.linspace(0.0, one_turn.nu_critical(BETA), points + 2)[1:-1]

    def F(E, N):
        return E * one_turn.suppression_closed_form(BETA, N / E)

    worst_T = worst_theta = 0.0
    for nu in nus:
        sol = one_turn.solve_matching(BETA, nu, energy)
        N = nu * energy
        h = 1e-5 * energy
        dFdE = (F(energy + h, N) - F(energy - h, N)) / (2 * h)
        dFdN = (F(energy, N + h) - F(energy, N - h)) / (2 * h)
        worst_T = max(worst_T, abs(dFdE + sol.T) / abs(sol.T))
        worst_theta = max(worst_theta, abs(dFdN + sol.theta) / abs(sol.theta))
    return max(worst_T, worst_theta) <= 1e-6, {
        "max_rel_error_T": worst_T, "max_rel_error_theta": worst_theta}


def check_oracle(energies=None, phase_samples=2000):
    params = ModelParams(beta=BETA, alpha=ALPHA)
    energies = np.geomspace(5e-4, 0.1, 20) if energies is None else energies
    lo, hi = np.cos(BETA + ALPHA) ** 2, np.cos(BETA - ALPHA) ** 2
    worst = 0.0
    envelope_ok = True
    rows = []
    for E in energies:
        tol = 1e-6 * E
        oracle = classical.oracle_boundary(params, E, phase_samples, tol)
        analytic, label = two_turn_boundary.critical_boundary(params, E)
        diff = abs(analytic - oracle)
        worst = max(worst, diff / max(1e-3 * E, 2 * tol))
        envelope_ok &= lo * E - 1e-12 <= analytic <= hi * E + 1e-12
        rows.append((float(E), oracle, analytic, label))
    return worst <= 1.0 and envelope_ok, {
        "worst_ratio_to_tolerance": worst, "envelope_ok": envelope_ok, "rows": rows}


def _glued(params=None):
    params = params or ModelParams(beta=BETA, alpha=ALPHA)
    return tun.suppression_curve(params)


def check_topology(curve=None):
    params = ModelParams(beta=BETA, alpha=ALPHA)
    n1 = tun.enumerate_bands(params).n1
    curve = curve or _glued(params)[0]
    first = curve.switch_energies[0][1] if curve.switch_energies else None
    return n1 == 4 and first == "Local(4)", {"n1": n1, "first_switch": first}


def check_optimal_energies(curve=None):
    params = ModelParams(beta=BETA, alpha=ALPHA)
    curve = curve or _glued(params)[0]
    predicted = dict(tun.tunneling_optima(params).minima)
    ratio = curve.F0 / curve.E
    found = {}
    for i in tun.local_minima(curve.E, ratio):
        kind = curve.branch[i]
        if kind != "Global":
            found.setdefault(tun.branch_index(kind), float(curve.E[i]))
    lowest = sorted(found)[:3]
    errs = {n: abs(found[n] / predicted[n] - 1) for n in lowest}
    return len(lowest) == 3 and max(errs.values()) <= 0.02, {
        "minima": {n: found[n] for n in lowest},
        "predicted": {n: predicted[n] for n in lowest}, "relative_errors": errs}


def check_envelopes(curve=None):
    params = ModelParams(beta=BETA, alpha=ALPHA)
    curve = curve or _glued(params)[0]
    f0 = tun.f_zero(params)
    half_width = 4 * np.exp(-1) * ALPHA / np.tan(BETA)
    dev = float(np.max(np.abs(curve.F0 / curve.E - f0)))
    bound = half_width + 3 * ALPHA**2
    min_F = float(curve.F0.min())
    return dev <= bound and min_F > 0, {"max_deviation": dev, "bound": bound,
                                       "min_F0": min_F}


def check_order_of_accuracy():
    coarse = tun.reduction_error(ModelParams(beta=BETA, alpha=np.pi / 30))
    fine = tun.reduction_error(ModelParams(beta=BETA, alpha=np.pi / 60))
    ratio = fine / coarse
    return 0.25 <= ratio <= 0.75, {"error_pi_30": coarse, "error_pi_60": fine,
                                   "ratio": ratio}


def check_sphaleron():
    numeric, wkb = sphaleron.linear_growth(1e3)
    growth_err = abs(numeric - wkb) / wkb
    exponent, xis = sphaleron.scaling_exponent(ModelParams.one_turn(BETA))
    params = ModelParams.one_turn(BETA, b=1e-3)
    residual = sphaleron.orbit_residual(sphaleron.build_sphaleron(params))
    minus = sphaleron.instability_check(params, delta=-1e-6)
    plus = sphaleron.instability_check(params, delta=1e-6)
    ok = (growth_err <= 0.02 and abs(exponent - 1) <= 0.2 and residual <= 1e-8
          and minus.escaped and minus.region == "xi<0"
          and plus.escaped and plus.region == "xi>0")
    return ok, {"growth_numeric": numeric, "growth_wkb": wkb, "growth_rel_error": growth_err,
                "scaling_exponent": exponent, "xi_max": xis, "orbit_residual": residual,
                "minus_region": minus.region, "plus_region": plus.region}


def check_degeneration(energies=(1e-3, 1e-2, 0.1)):
    params = ModelParams(beta=BETA, alpha=1e-4)
    f0 = tun.f_zero(params)
    worst = 0.0
    for E in energies:
        tau, dT = tun.branch_point(params, "Global", E)
        sol = tun.solve_exact(params, E, 0.0, tun.seed_from_reduced(params, tau, dT))
        worst = max(worst, abs(sol.F / (E * f0) - 1))
    return worst <= 1e-3, {"max_rel_error": worst}


CHECKS = {
    1: ("one-turn exponent", check_one_turn),
    2: ("thermodynamic identities", check_identities),
    3: ("oracle vs analytic boundary", check_oracle),
    4: ("branch topology", check_topology),
    5: ("optimal energies", check_optimal_energies),
    6: ("envelopes", check_envelopes),
    7: ("order of accuracy", check_order_of_accuracy),
    8: ("sphaleron dynamics", check_sphaleron),
    9: ("alpha -> 0 degeneration", check_degeneration),
}


def run_checks(numbers=None):
    """Run the selected checks (all by default) in order."""
    numbers = sorted(CHECKS) if numbers is None else numbers
    curve = None
    out = []
    for n in numbers:
        name, fn = CHECKS[n]
        if n in (4, 5, 6):
            if curve is None:
                curve = _glued()[0]
            out.append(_timed(n, name, lambda fn=fn: fn(curve)))
        else:
            out.append(_timed(n, name, fn))
    return out
