"""``leafstab <classify|scan|simulate|probe|verify> --config FILE [--out DIR] [--seed N]``

Exit codes: 0 success, 1 usage, 2 configuration, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import classifier as cl
from . import stability_core as core
from .config import RunConfig, load_config
from .errors import NumericalAmbiguity, NumericalError, ParseError, ValidationError
from .simulator import (
    ProbeMode,
    conservation_report,
    integrate,
    invariance_report,
    stability_probe,
    trajectory_csv,
)
from .vehicle_model import chart_fields, equilibrium_state
from .verify import format_report, run_checks

EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 1, 2, 3, 4
COMMANDS = ("classify", "scan", "simulate", "probe", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leafstab", description="Stability of spinning equilibria of an underwater vehicle.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, metavar="FILE")
    parser.add_argument("--out", default=".", metavar="DIR", help="directory for CSV and report files")
    parser.add_argument("--seed", type=int, default=None, help="overrides [probe] seed")
    return parser


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _need_equilibrium(cfg: RunConfig):
    if cfg.equilibrium is None:
        raise UsageError("this command needs Pi_e and P_e in [equilibrium]")
    return cfg.equilibrium


def cmd_classify(cfg: RunConfig, out: Path, seed: int) -> int:
    e, p = _need_equilibrium(cfg), cfg.params
    label = cl.classify(e, p, cfg.boundary_tol)
    full, leaf = cl.margins(e, p)
    star = cl.lambda_star(e, p)
    lam = star.lam if cfg.lam is None else cfg.lam
    fields = chart_fields(p, lam)
    cs = core.ConstraintSet(fields.constraints(), fields.G)
    x = e.chart_point()
    sigma = core.lagrange_multipliers(cs, x, cfg.tolerances).sigma
    ph = core.projected_hessian(cs, x, tol=cfg.tolerances)
    eig = np.linalg.eigvalsh(ph.matrix)
    try:
        definite = str(core.definiteness(ph.matrix, cfg.tolerances).positive_definite).lower()
    except NumericalAmbiguity:
        definite = "ambiguous"
    print(f"label: {label.value}")
    print(f"margin_full: {full:.12g}")
    print(f"margin_leaf: {leaf:.12g}")
    print(f"lambda_star: {star.lam:.12g}")
    print(f"theta3_max: {star.theta_max:.12g}")
    print(f"lambda: {lam:.12g}")
    print("sigma (C1, C3, C5): " + ", ".join(f"{s:.12g}" for s in sigma))
    print(f"first_order_residual: {core.first_order_residual(cs, x, cfg.tolerances):.3e}")
    print("projected_hessian_eigenvalues: " + ", ".join(f"{v:.12g}" for v in eig))
    print(f"positive_definite: {definite}")
    return 0


def cmd_scan(cfg: RunConfig, out: Path, seed: int) -> int:
    if cfg.scan is None:
        raise UsageError("scan needs a [scan] section")
    rows = cl.scan(cfg.scan, cfg.boundary_tol)
    csv_path = _write(out, cfg.output.csv_path or "scan.csv", cl.scan_csv(rows))
    plot_path = _write(out, cfg.output.plot_data_path or "scan_plot.csv", cl.plot_data_csv(rows))
    svg_path = _write(out, "scan_regions.svg", cl.region_map_svg(rows))
    counts = {}
    for r in rows:
        counts[r.label.value] = counts.get(r.label.value, 0) + 1
    print(f"rows: {len(rows)}")
    for name in sorted(counts):
        print(f"{name}: {counts[name]}")
    print(f"wrote {csv_path}, {plot_path}, {svg_path}")
    return 0


def cmd_simulate(cfg: RunConfig, out: Path, seed: int) -> int:
    if cfg.z0 is not None:
        z0 = np.array(cfg.z0)
    else:
        z0 = equilibrium_state(_need_equilibrium(cfg)).as_vector()
    traj = integrate(z0, cfg.params, cfg.integrator)
    path = _write(out, cfg.output.csv_path or "trajectory.csv", trajectory_csv(traj))
    drift = conservation_report(traj, cfg.params)
    on_submanifold = np.linalg.norm(np.cross(z0[3:6], z0[6:9])) < 1e-12
    print(f"steps: accepted={traj.accepted} rejected={traj.rejected}")
    for name, value in drift.items():
        note = " (informational off the invariant submanifold)" if name in ("C4", "C5") and not on_submanifold else ""
        print(f"drift {name}: {value:.3e}{note}")
    print(f"max |P x Gamma|: {invariance_report(traj):.3e}")
    print(f"wrote {path}")
    return 0


def cmd_probe(cfg: RunConfig, out: Path, seed: int) -> int:
    e, ps = _need_equilibrium(cfg), cfg.probe
    icfg = dataclasses.replace(cfg.integrator, t_final=ps.t_final, rel_tol=ps.rel_tol)
    exploratory = (ps.mode is ProbeMode.FULL_SPACE
                   and cl.classify(e, cfg.params, cfg.boundary_tol) is not cl.RegionLabel.STABLE_FULL)
    report = stability_probe(e, cfg.params, ps.mode, ps.epsilon, ps.samples, icfg, seed,
                             ps.escape_radius, exploratory=exploratory)
    path = _write(out, cfg.output.csv_path or "probe_samples.csv", report.samples_csv())
    print(report.summary())
    print(f"wrote {path}")
    return 0


def cmd_verify(cfg: RunConfig, out: Path, seed: int) -> int:
    results = run_checks(seed)
    text = format_report(results, seed)
    sys.stdout.write(text)
    _write(out, "verify_report.txt", text)
    return 0 if all(r.passed for r in results) else EXIT_VERIFY


HANDLERS = {
    "classify": cmd_classify,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
    "probe": cmd_probe,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"leafstab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError) as exc:
        print(f"leafstab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.probe.seed if args.seed is None else args.seed
    try:
        return HANDLERS[args.command](cfg, Path(args.out), seed)
    except UsageError as exc:
        print(f"leafstab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"leafstab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # AsymmetricParams and friends: the config asked for something undefined
        print(f"leafstab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
