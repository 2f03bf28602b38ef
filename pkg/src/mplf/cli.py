"""Command-line front end.

Subcommands mirror the library surface: ``solve``, ``certify``,
``linearize``, and ``sweep``.  Outputs are deterministic (no randomness, no
timestamps): identical inputs produce byte-identical artifacts.  Verbosity
is controlled by the ``MPLF_LOG`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, certify, linearize
from .errors import MplfError
from .netmodel import complex_to_doc, network_from_file, zero_load_voltage
from .powerflow import InjectionSet, injections_from_file, solve_fixed_point

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CERTIFIED = 2


@dataclass
class RunConfig:
    """Validated run parameters shared by the subcommands."""

    subcommand: str
    network_path: str
    injections_path: str
    base_injections_path: str | None = None
    tol_step: float = 1e-10
    tol_residual: float = 1e-8
    tol_kappa: float = 1e-3
    max_iter: int = 1000
    theorem: int = 2
    kappa_range: tuple = (-1.5, 1.5)
    points: int = 61
    base_kappa: float = 1.0
    scan_points: int = 10000
    kind: str = "fot"
    jobs: int = 1
    output_path: str | None = None
    interval_output_path: str | None = None

    def validate(self):
        for name in ("tol_step", "tol_residual", "tol_kappa"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iter < 1 or self.points < 1 or self.scan_points < 1 or self.jobs < 1:
            raise ValueError("max_iter, points, scan_points and jobs must be >= 1")
        if self.kappa_range[0] > self.kappa_range[1]:
            raise ValueError("kappa range must be well ordered (min <= max)")
        if self.theorem not in (1, 2):
            raise ValueError("theorem must be 1 or 2")
        return self


def _scrub(value):
    """Make a structure strict-JSON safe (non-finite floats become null)."""
    if isinstance(value, dict):
        return {k: _scrub(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_scrub(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _emit_json(doc, path):
    text = json.dumps(_scrub(doc), indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(cfg: RunConfig):
    model = network_from_file(cfg.network_path)
    w_profile = zero_load_voltage(model)
    inj = injections_from_file(cfg.injections_path, model)
    return model, w_profile, inj


def _solve_base(cfg, model, w_profile):
    """Base pair for certificates: (w, 0) unless base injections are given."""
    if cfg.base_injections_path is None:
        return w_profile.w, InjectionSet.zeros(model)
    base_inj = injections_from_file(cfg.base_injections_path, model)
    sol = solve_fixed_point(
        model,
        w_profile,
        base_inj,
        tol_step=cfg.tol_step,
        tol_residual=cfg.tol_residual,
        max_iter=cfg.max_iter,
    )
    return sol.v, base_inj


def cmd_solve(cfg: RunConfig) -> int:
    model, w_profile, inj = _load(cfg)
    sol = solve_fixed_point(
        model,
        w_profile,
        inj,
        tol_step=cfg.tol_step,
        tol_residual=cfg.tol_residual,
        max_iter=cfg.max_iter,
    )
    doc = {
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual_inf": sol.residual_inf,
        "contraction_estimate": sol.contraction_estimate,
        "phases": ["{}::{}".format(*key) for key in model.index.phase_labels()],
        "v": [complex_to_doc(z) for z in sol.v],
        "v_abs": [float(x) for x in np.abs(sol.v)],
        "i": [complex_to_doc(z) for z in sol.i],
        "delta_connections": ["{}::{}".format(*key) for key in model.index.delta_labels()],
        "i_delta": [complex_to_doc(z) for z in sol.i_delta],
    }
    _emit_json(doc, cfg.output_path)
    return EXIT_OK if sol.converged else EXIT_ERROR


def cmd_certify(cfg: RunConfig) -> int:
    model, w_profile, inj = _load(cfg)
    base = _solve_base(cfg, model, w_profile)
    if cfg.theorem == 1:
        cert = certify.check_theorem1(model, w_profile, base, inj, scan_points=cfg.scan_points)
    else:
        cert = certify.check_theorem2(model, w_profile, base, inj)
    _emit_json(cert.to_dict(), cfg.output_path)
    return EXIT_OK if cert.satisfied else EXIT_NOT_CERTIFIED


def cmd_linearize(cfg: RunConfig) -> int:
    model, w_profile, inj = _load(cfg)
    sol = solve_fixed_point(
        model,
        w_profile,
        inj,
        tol_step=cfg.tol_step,
        tol_residual=cfg.tol_residual,
        max_iter=cfg.max_iter,
    )
    if cfg.kind == "fot":
        lin = linearize.fot_linearize(model, sol, inj)
    else:
        lin = linearize.fpl_linearize(model, w_profile, sol, inj)
    _emit_json(lin.to_dict(), cfg.output_path)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    model, w_profile, s_ref = _load(cfg)
    base_inj = s_ref.scaled(cfg.base_kappa)
    base_sol = solve_fixed_point(
        model,
        w_profile,
        base_inj,
        tol_step=cfg.tol_step,
        tol_residual=cfg.tol_residual,
        max_iter=cfg.max_iter,
    )
    kappas = np.linspace(cfg.kappa_range[0], cfg.kappa_range[1], cfg.points)
    result = analysis.linear_error_sweep(
        model,
        w_profile,
        base_sol,
        base_inj,
        s_ref,
        kappas,
        base_kappa=cfg.base_kappa,
        kappa_bounds=cfg.kappa_range,
        tol_kappa=cfg.tol_kappa,
        scan_points=cfg.scan_points,
        tol_step=cfg.tol_step,
        tol_residual=cfg.tol_residual,
        max_iter=cfg.max_iter,
        jobs=cfg.jobs,
    )
    if cfg.output_path is None or cfg.output_path == "-":
        import csv as _csv

        writer = _csv.writer(sys.stdout)
        writer.writerow(analysis.CSV_COLUMNS)
        for row in result.rows():
            writer.writerow(["" if row[c] is None else row[c] for c in analysis.CSV_COLUMNS])
    else:
        analysis.write_continuation_csv(cfg.output_path, result)
    if cfg.interval_output_path is not None:
        summary = analysis.interval_summary(
            result, cfg.kappa_range, zero_base=(cfg.base_kappa == 0.0)
        )
        _emit_json(summary, cfg.interval_output_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mplf",
        description="Multiphase distribution load flow: solve, certify, linearize, sweep.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, kappa=False):
        p.add_argument("network", help="network JSON document")
        p.add_argument("injections", help="injection JSON document")
        p.add_argument("--tol-step", type=float, default=1e-10)
        p.add_argument("--tol-residual", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=1000)
        p.add_argument("--output", default=None, help="output path (default: stdout)")
        if kappa:
            p.add_argument("--kappa-min", type=float, default=-1.5)
            p.add_argument("--kappa-max", type=float, default=1.5)

    p_solve = sub.add_parser("solve", help="run the fixed-point load-flow solver")
    common(p_solve)

    p_cert = sub.add_parser("certify", help="evaluate a solvability certificate")
    common(p_cert)
    p_cert.add_argument("--theorem", type=int, choices=(1, 2), default=2)
    p_cert.add_argument("--scan-points", type=int, default=10000)
    p_cert.add_argument(
        "--base-injections",
        default=None,
        help="recenter the certificate at the solution for these injections",
    )

    p_lin = sub.add_parser("linearize", help="build a linear surrogate model")
    common(p_lin)
    p_lin.add_argument("--kind", choices=("fot", "fpl"), required=True)

    p_sweep = sub.add_parser("sweep", help="continuation sweep along kappa * injections")
    common(p_sweep, kappa=True)
    p_sweep.add_argument("--points", type=int, default=61)
    p_sweep.add_argument("--base-kappa", type=float, default=1.0)
    p_sweep.add_argument("--tol-kappa", type=float, default=1e-3)
    p_sweep.add_argument("--scan-points", type=int, default=10000)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument(
        "--interval-output", default=None, help="write the interval summary JSON here"
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        subcommand=args.subcommand,
        network_path=args.network,
        injections_path=args.injections,
        tol_step=args.tol_step,
        tol_residual=args.tol_residual,
        max_iter=args.max_iter,
        output_path=args.output,
    )
    cfg.base_injections_path = getattr(args, "base_injections", None)
    cfg.theorem = getattr(args, "theorem", 2)
    cfg.scan_points = getattr(args, "scan_points", 10000)
    cfg.kind = getattr(args, "kind", "fot")
    cfg.tol_kappa = getattr(args, "tol_kappa", 1e-3)
    cfg.points = getattr(args, "points", 61)
    cfg.base_kappa = getattr(args, "base_kappa", 1.0)
    cfg.jobs = getattr(args, "jobs", 1)
    cfg.interval_output_path = getattr(args, "interval_output", None)
    if hasattr(args, "kappa_min"):
        cfg.kappa_range = (args.kappa_min, args.kappa_max)
    return cfg.validate()


COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "linearize": cmd_linearize,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    level = os.environ.get("MPLF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.subcommand](cfg)
    except (MplfError, ValueError, OSError) as exc:
        print(f"mplf: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
