"""Command-line interface: ``sharpturn <subcommand> [options]``.

Every subcommand writes a CSV (header row plus a ``# config:`` comment)
and a JSON mirror into the output directory, taken from ``--output-dir``,
else ``$SHARPTURN_OUTPUT``, else the working directory. Exit status is 2
for configuration problems and 1 for solver failures; in both cases a JSON
error record goes to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, classical, one_turn, sphaleron, two_turn_boundary
from . import two_turn_tunneling as tun
from .errors import ConfigError, DomainError, SharpTurnError, SolverError
from .geometry import ModelParams, params_from_mapping

OUTPUT_ENV = "SHARPTURN_OUTPUT"
DIGITS = 12


@dataclass
class RunConfig:
    model: ModelParams
    emin: float = 1e-4
    emax: float = 5e-2
    points: int = 200
    phases: int = 2000
    output: Path = Path(".")
    fmt: str = "csv"
    seed: int = 0
    workers: int = 1
    L: float | None = None          # set for physical units
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("grid needs at least one point")
        if not 0 < self.emin <= self.emax:
            raise ConfigError(f"energy grid [{self.emin}, {self.emax}] is not increasing")
        if self.points > 1 and self.emin == self.emax:
            raise ConfigError("energy grid with several points needs emin < emax")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.L is not None and not self.L > 0:
            raise ConfigError("L must be positive")

    @property
    def scale(self):
        """Factor turning rescaled energies into the output unit system."""
        return 1.0 if self.L is None else self.L**2

    def energy_grid(self):
        # grid limits are given in the output unit system
        return np.geomspace(self.emin, self.emax, self.points) / self.scale

    def to_dict(self):
        return {"model": self.model.to_dict(), "emin": self.emin, "emax": self.emax,
                "points": self.points, "phases": self.phases, "seed": self.seed,
                "workers": self.workers, "L": self.L, **self.extra}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{DIGITS}g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(_fmt(v)) if np.isfinite(v) else str(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def write_table(cfg: RunConfig, name: str, header, rows):
    """Write ``name.csv`` and ``name.json``; return the CSV path."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_jsonable(cfg.to_dict()), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path = cfg.output / f"{name}.csv"
    path.write_text(buf.getvalue())
    mirror = {"config": cfg.to_dict(), "columns": list(header),
              "rows": [list(r) for r in rows]}
    (cfg.output / f"{name}.json").write_text(
        json.dumps(_jsonable(mirror), sort_keys=True, indent=1) + "\n")
    return path


def write_report(cfg: RunConfig, name: str, report: dict):
    cfg.output.mkdir(parents=True, exist_ok=True)
    path = cfg.output / f"{name}.json"
    path.write_text(json.dumps(_jsonable({"config": cfg.to_dict(), **report}),
                               sort_keys=True, indent=1) + "\n")
    return path


# ---------------------------------------------------------------------------
# subcommands

def cmd_one_turn(cfg: RunConfig, args):
    beta = cfg.model.beta
    ncr = one_turn.nu_critical(beta)
    rows = []
    for nu in np.linspace(0.0, ncr, cfg.points):
        closed = one_turn.suppression_closed_form(beta, nu)
        sol = one_turn.solve_matching(beta, nu)
        f_match = sol.f
        if 0 < nu < ncr:
            f_match = one_turn.matching_trajectory(beta, nu).f
        rows.append((nu, closed, f_match, sol.T, sol.theta))
    write_table(cfg, "one_turn", ["nu", "f_closed", "f_matching", "T", "theta"], rows)
    return 0


def cmd_boundary(cfg: RunConfig, args):
    p = cfg.model
    s = cfg.scale
    rows = []
    for E in cfg.energy_grid():
        N, label = two_turn_boundary.critical_boundary(p, E)
        rows.append((E * s, N * s, label, float(two_turn_boundary.ncr_global(p, E)) * s))
    write_table(cfg, "boundary", ["E", "N_cr", "branch", "N_global"], rows)
    optima = [(n, En * s, Ecr * s)
              for n, En, Ecr in two_turn_boundary.classical_optima(p, args.n_max)]
    write_table(cfg, "boundary_optima", ["n", "E_n", "E_n_cr"], optima)
    return 0


def _oracle_row(job):
    p, E, phases = job
    oracle = classical.oracle_boundary(p, E, phases, 1e-6 * E)
    analytic, _ = two_turn_boundary.critical_boundary(p, E)
    return E, oracle, analytic


def cmd_oracle(cfg: RunConfig, args):
    p = cfg.model
    jobs = [(p, float(E), cfg.phases) for E in cfg.energy_grid()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_oracle_row, jobs))
    else:
        results = [_oracle_row(j) for j in jobs]
    s = cfg.scale
    rows = [(E * s, o * s, a * s, abs(a - o) * s) for E, o, a in results]
    write_table(cfg, "oracle", ["E", "N_cr_oracle", "N_cr_analytic", "abs_diff"], rows)
    return 0


def cmd_tunnel(cfg: RunConfig, args):
    p = cfg.model
    grid = cfg.energy_grid()
    curve, branches = tun.suppression_curve(p, grid, args.n_max, args.exact, cfg.workers)
    s = cfg.scale
    rows = []
    for br in branches:
        for smp in br.samples:
            F0, T = smp.F0, smp.T
            if args.exact and smp.exact is not None:
                F0, T = smp.exact.F, smp.exact.T
            rows.append((smp.E * s, smp.tau, smp.delta_T, F0 * s, T, br.kind))
    write_table(cfg, "tunnel_branches", ["E", "tau", "delta_T", "F0", "T", "branch"], rows)
    flags = curve.is_switch()
    glued = [(E * s, F * s, b, flag)
             for E, F, b, flag in zip(curve.E, curve.F0, curve.branch, flags)]
    write_table(cfg, "tunnel_glued", ["E", "F0", "branch", "is_switch"], glued)
    return 0


def cmd_sphaleron(cfg: RunConfig, args):
    p = cfg.model
    orbit = sphaleron.build_sphaleron(p)
    q = sphaleron.mathieu_q(orbit)
    numeric, wkb = sphaleron.linear_growth(args.q)
    ro = sphaleron.reflected_orbit(p, args.s1)
    approach, _ = sphaleron.smooth_approach(p, args.s1)
    exponent, xis = sphaleron.scaling_exponent(p, tuple(args.widths), args.s1)
    report = {
        "q": q, "psi0": orbit.psi0, "xi_sphaleron": orbit.xi,
        "orbit_residual": sphaleron.orbit_residual(orbit),
        "growth": {"q": args.q, "ode": numeric, "wkb": wkb,
                   "relative_error": abs(numeric - wkb) / wkb},
        "reflected": {"s1": args.s1, "xi_max": ro.xi_max, "approach_xi_max": approach,
                      "touch_gap": ro.touch_gap, "rho_max": ro.rho_max,
                      "nu": ro.launch.excitation / ro.launch.energy},
        "scaling": {"widths": list(args.widths), "xi_max": xis, "exponent": exponent},
        "instability": [vars(sphaleron.instability_check(p, delta=d))
                        for d in (-1e-6, 1e-6)],
    }
    write_report(cfg, "sphaleron", report)
    return 0


def cmd_validate(cfg: RunConfig, args):
    numbers = args.only or None
    results = acceptance.run_checks(numbers)
    for r in results:
        print(r.line())
    summary = {"passed": all(r.passed for r in results),
               "checks": [r.to_dict() for r in results]}
    write_report(cfg, "validate", summary)
    print(json.dumps(_jsonable({"passed": summary["passed"],
                                "criteria": {r.number: r.passed for r in results}}),
                     sort_keys=True))
    return 0 if summary["passed"] else 1


COMMANDS = {
    "one-turn": cmd_one_turn,
    "boundary": cmd_boundary,
    "oracle": cmd_oracle,
    "tunnel": cmd_tunnel,
    "sphaleron": cmd_sphaleron,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# argument handling

def build_parser():
    parser = argparse.ArgumentParser(prog="sharpturn",
                                     description="Reflection in sharp-turn waveguides.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with model, grid and run settings")
    common.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--beta", type=float, help="second turn angle, radians")
    common.add_argument("--alpha", type=float, help="first turn angle, radians")
    common.add_argument("--b", type=float, help="smoothening width")
    common.add_argument("--emin", type=float)
    common.add_argument("--emax", type=float)
    common.add_argument("--grid", type=int, help="number of grid points")
    common.add_argument("--workers", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--physical-units", action="store_true",
                        help="energies in physical units, E = L^2 E~")
    common.add_argument("--L", type=float, help="intermediate length for --physical-units")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("one-turn", parents=[common], help="one-turn suppression exponent")
    b = sub.add_parser("boundary", parents=[common], help="classical boundary N_cr(E)")
    b.add_argument("--n-max", type=int, default=12)
    o = sub.add_parser("oracle", parents=[common], help="brute-force boundary check")
    o.add_argument("--phases", type=int)
    t = sub.add_parser("tunnel", parents=[common], help="two-turn suppression exponent")
    t.add_argument("--exact", action="store_true", help="refine through the exact system")
    t.add_argument("--n-max", type=int, default=tun.DEFAULT_N_MAX)
    s = sub.add_parser("sphaleron", parents=[common], help="dynamics at a smoothened turn")
    s.add_argument("--s1", type=float, default=-0.5)
    s.add_argument("--q", type=float, default=1e3, help="Mathieu q for the growth check")
    s.add_argument("--widths", type=float, nargs=2, default=[1e-3, 4e-3])
    v = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    v.add_argument("--only", type=int, nargs="+", choices=sorted(acceptance.CHECKS))
    return parser


DEFAULT_MODELS = {
    "one-turn": {"beta": np.pi / 3},
    "boundary": {"beta": np.pi / 3, "alpha": np.pi / 30},
    "oracle": {"beta": np.pi / 3, "alpha": np.pi / 30},
    "tunnel": {"beta": np.pi / 3, "alpha": np.pi / 30},
    "sphaleron": {"beta": np.pi / 3, "b": 1e-3},
    "validate": {"beta": np.pi / 3, "alpha": np.pi / 30},
}

DEFAULT_GRIDS = {
    "one-turn": (1e-4, 5e-2, 51),
    "boundary": (5e-4, 0.1, 200),
    "oracle": (5e-4, 0.1, 20),
    "tunnel": tun.DEFAULT_GRID,
}


def make_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - {"model", "emin", "emax", "points", "phases", "workers",
                           "seed", "L", "output"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model = dict(DEFAULT_MODELS[args.command])
    model.update(data.get("model", {}))
    for key in ("beta", "alpha", "b"):
        if getattr(args, key) is not None:
            model[key] = getattr(args, key)
    if args.command == "sphaleron":
        model.pop("alpha", None)
        model["L"] = 0.0
    if args.physical_units != (args.L is not None or data.get("L") is not None):
        raise ConfigError("--physical-units and --L must be given together")
    if args.physical_units and args.command in ("one-turn", "sphaleron", "validate"):
        raise ConfigError(f"{args.command} has no physical-unit mode")
    L = args.L if args.L is not None else data.get("L")
    if L is not None and args.command in ("boundary", "oracle", "tunnel"):
        model.setdefault("L", 1.0)
    try:
        params = params_from_mapping(model)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    lo, hi, n = DEFAULT_GRIDS.get(args.command, (1e-4, 5e-2, 1))
    pick = lambda flag, key, default: flag if flag is not None else data.get(key, default)
    out = args.output_dir or data.get("output") or os.environ.get(OUTPUT_ENV) or "."
    try:
        return RunConfig(
            model=params,
            emin=float(pick(args.emin, "emin", lo)),
            emax=float(pick(args.emax, "emax", hi)),
            points=int(pick(args.grid, "points", n)),
            phases=int(pick(getattr(args, "phases", None), "phases", 2000)),
            output=Path(out),
            seed=int(pick(args.seed, "seed", 0)),
            workers=int(pick(args.workers, "workers", 1)),
            L=None if L is None else float(L),
            extra={"command": args.command},
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _error_json(kind, exc):
    record = exc.to_dict() if isinstance(exc, SharpTurnError) else {
        "error": type(exc).__name__, "message": str(exc)}
    record["kind"] = kind
    sys.stderr.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
    except ConfigError as exc:
        _error_json("config", exc)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError) as exc:
        _error_json("config", exc)
        return 2
    except (SolverError, FloatingPointError) as exc:
        _error_json("solver", exc)
        return 1
