"""Command-line entry point: ``bohmfpt <command> [options]``.

Commands write data files (CSV/JSON) and a run manifest next to them. Options
can also come from a JSON file given with ``--config``; its keys are the
option names with dashes replaced by underscores (a manifest's ``config`` block
works as-is). Precedence: command-line flags > config file > defaults.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from bohmfpt import __version__
from bohmfpt.analytic import alpha, bohm_velocity, lambda_continuous, mean_nu
from bohmfpt.ensemble import (
    EnsembleConfig,
    run_ensemble,
    sample_initial_positions,
    write_nu_csv,
    write_summary_json,
)
from bohmfpt.errors import ConfigurationError, DegenerateFieldError, DomainError
from bohmfpt.spectral import closed_form_check, gaussian_grid, propagate_free, write_snapshot
from bohmfpt.statistics import DEFAULT_CAP, DEFAULT_K_FRACTION, build_empirical, report
from bohmfpt.svgplot import line_plot
from bohmfpt.trajectory import METHODS, IntegratorConfig, integrate_trajectory, write_trajectory_csv
from bohmfpt.units import (
    ELECTRON_MASS,
    HBAR,
    PhysicalConfig,
    asymptotic_velocity_physical,
    superluminal_threshold,
    to_dimensionless,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(ValueError):
    pass


def parse_range(spec: str) -> np.ndarray:
    """``"start:stop:num"`` (inclusive linspace) or a comma-separated list."""
    spec = str(spec).strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must look like start:stop:num, got {spec!r}")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise UsageError("range needs at least one point")
        return np.linspace(start, stop, num)
    values = [float(v) for v in spec.split(",") if v.strip()]
    if not values:
        raise UsageError(f"empty list {spec!r}")
    return np.array(values)


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolved_config(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "func", "manifest"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(args: argparse.Namespace, artifacts: list[Path], wall_time: float,
                   seed: int | None = None) -> Path:
    """Record what ran, with which settings, and checksums of everything written."""
    path = Path(args.manifest) if args.manifest else _default_manifest_path(args)
    manifest = {
        "schema_version": 1,
        "tool": "bohmfpt",
        "tool_version": __version__,
        "command": args.command,
        "config": _resolved_config(args),
        "seed": seed,
        "artifacts": {str(p): _sha256(p) for p in artifacts},
        "wall_time_s": wall_time,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    _write_json(path, manifest)
    return path


def _default_manifest_path(args) -> Path:
    if args.command == "simulate":
        return Path(args.out_dir) / "manifest.json"
    out = Path(args.out)
    return out.with_name(out.name + ".manifest.json")


# --------------------------------------------------------------------------
# commands


def cmd_figure1(args) -> list[Path]:
    d_list = parse_range(args.d_list)
    nu = parse_range(args.nu_grid)
    if np.any(d_list <= 0):
        raise UsageError("every d in --d-list must be positive")
    if np.any(nu < 0):
        raise UsageError("--nu-grid must be non-negative")
    columns = [nu] + [np.asarray(lambda_continuous(nu, float(d))) for d in d_list]
    header = ["nu"] + [f"lambda_d{float(d):g}" for d in d_list]
    out = Path(args.out)
    _write_csv(out, header, columns)
    written = [out]
    if args.svg:
        svg = Path(args.svg)
        svg.write_text(line_plot(nu, dict(zip(header[1:], columns[1:])), "nu", "Lambda_cont(nu)"),
                       encoding="utf-8")
        written.append(svg)
    return written


def cmd_figure2(args) -> list[Path]:
    d = parse_range(args.d_grid)
    if np.any(d < 0):
        raise UsageError("--d-grid must be non-negative")
    means = np.array([mean_nu(float(v)) for v in d])
    alphas = np.asarray(alpha(d), dtype=float)
    out = Path(args.out)
    _write_csv(out, ["d", "mean_nu", "alpha"], [d, means, alphas])
    written = [out]
    if args.svg:
        svg = Path(args.svg)
        svg.write_text(line_plot(d, {"mean_nu": means, "alpha": alphas}, "d", "<nu>, alpha"),
                       encoding="utf-8")
        written.append(svg)
    return written


def _dimensionless_d(args) -> float:
    if args.units == "si":
        if args.a is None:
            raise UsageError("--units si needs --a (packet width in metres)")
        phys = PhysicalConfig(mass=args.mass, packet_width_a=args.a, detector_radius_d=args.d,
                              hbar=args.hbar)
        return to_dimensionless(phys)[0].d
    if not (args.d > 0 and math.isfinite(args.d)):
        raise UsageError(f"--d must be positive, got {args.d}")
    return float(args.d)


def cmd_simulate(args) -> list[Path]:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if args.dump_trajectories < 0 or args.dump_trajectories > args.n:
        raise UsageError("--dump-trajectories must lie in [0, n]")
    d = _dimensionless_d(args)
    integrator = IntegratorConfig(method=args.method, dt_init=args.dt_init, rel_tol=args.rel_tol,
                                  abs_tol=args.abs_tol, t_max=args.t_max, event_tol_time=args.event_tol,
                                  max_steps=args.max_steps)
    cfg = EnsembleConfig(n_samples=args.n, seed=args.seed, d=d, mode=args.mode, integrator=integrator)
    result = run_ensemble(cfg, workers=args.workers)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    nu_path = out_dir / "nu.csv"
    summary_path = out_dir / "summary.json"
    report_path = out_dir / "report.json"
    write_nu_csv(result, nu_path)
    write_summary_json(result, summary_path)
    rep = report(build_empirical(result), d, cap=args.cap, k_fraction=args.k_fraction)
    _write_json(report_path, rep)
    written = [nu_path, summary_path, report_path]
    if args.dump_trajectories:
        traj_dir = out_dir / "trajectories"
        traj_dir.mkdir(exist_ok=True)
        positions = sample_initial_positions(args.dump_trajectories, args.seed)
        for i, start in enumerate(positions):
            path = traj_dir / f"sample_{i:06d}.csv"
            write_trajectory_csv(integrate_trajectory(start, bohm_velocity, integrator, d), path)
            written.append(path)
    print(json.dumps(rep, indent=2, sort_keys=True))
    return written


def cmd_propagate_check(args) -> list[Path]:
    rep = closed_form_check(args.n, args.L, args.t)
    out = Path(args.out)
    _write_json(out, rep)
    written = [out]
    if args.snapshot:
        snap = Path(args.snapshot)
        grid = propagate_free(gaussian_grid(args.n, args.L), args.t)
        written += [snap, write_snapshot(grid, snap)]
    print(json.dumps(rep, indent=2, sort_keys=True))
    return written


def cmd_units(args) -> list[Path]:
    phys = PhysicalConfig(mass=args.mass, packet_width_a=args.a, detector_radius_d=args.d,
                          hbar=args.hbar)
    cfg, t, r = to_dimensionless(phys, args.t_phys, args.r_phys)
    payload = {
        "d": cfg.d,
        "t": t,
        "r": r,
        "time_unit_s": phys.time_unit,
        "R0": args.R0,
        "v_inf_m_per_s": asymptotic_velocity_physical(phys, args.R0),
        "superluminal_threshold_R0": superluminal_threshold(phys),
    }
    out = Path(args.out)
    _write_json(out, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return [out]


# --------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, metavar="JSON", help="read option defaults from a JSON file")
    p.add_argument("--manifest", default=None, metavar="JSON", help="where to write the run manifest")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="bohmfpt",
        description="Bohmian first-passage times for a freely spreading 3D Gaussian packet.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    f1 = sub.add_parser("figure1", help="continuous density of nu for several detector radii")
    f1.add_argument("--d-list", default="2,5,10,30")
    f1.add_argument("--nu-grid", default="0:3:3001", metavar="START:STOP:NUM")
    f1.add_argument("--out", default="figure1.csv")
    f1.add_argument("--svg", default=None, metavar="PATH")
    f1.set_defaults(func=cmd_figure1)
    subs["figure1"] = f1

    f2 = sub.add_parser("figure2", help="mean reciprocal passage time and alpha versus d")
    f2.add_argument("--d-grid", default="0:30:3001", metavar="START:STOP:NUM")
    f2.add_argument("--out", default="figure2.csv")
    f2.add_argument("--svg", default=None, metavar="PATH")
    f2.set_defaults(func=cmd_figure2)
    subs["figure2"] = f2

    sim = sub.add_parser("simulate", help="Monte-Carlo ensemble of passage times")
    sim.add_argument("--n", type=int, default=100_000)
    sim.add_argument("--d", type=float, default=2.0, help="detector radius (dimensionless, or metres with --units si)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mode", choices=["analytic", "numeric"], default="analytic")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--units", choices=["natural", "si"], default="natural")
    sim.add_argument("--a", type=float, default=None, help="packet width in metres (--units si)")
    sim.add_argument("--mass", type=float, default=ELECTRON_MASS)
    sim.add_argument("--hbar", type=float, default=HBAR)
    defaults = IntegratorConfig()
    sim.add_argument("--method", choices=list(METHODS), default=defaults.method)
    sim.add_argument("--dt-init", type=float, default=defaults.dt_init)
    sim.add_argument("--rel-tol", type=float, default=defaults.rel_tol)
    sim.add_argument("--abs-tol", type=float, default=defaults.abs_tol)
    sim.add_argument("--t-max", type=float, default=defaults.t_max)
    sim.add_argument("--event-tol", type=float, default=defaults.event_tol_time)
    sim.add_argument("--max-steps", type=int, default=defaults.max_steps)
    sim.add_argument("--cap", type=float, default=DEFAULT_CAP, help="truncation level for the mean")
    sim.add_argument("--k-fraction", type=float, default=DEFAULT_K_FRACTION)
    sim.add_argument("--out-dir", default="simulate_out")
    sim.add_argument("--dump-trajectories", type=int, default=0, metavar="K",
                     help="integrate the first K samples and write each path as CSV")
    sim.set_defaults(func=cmd_simulate)
    subs["simulate"] = sim

    pc = sub.add_parser("propagate-check", help="spectral propagator versus the closed-form packet")
    pc.add_argument("--n", type=int, default=64)
    pc.add_argument("--L", type=float, default=16.0)
    pc.add_argument("--t", type=float, default=2.0)
    pc.add_argument("--out", default="propagate_check.json")
    pc.add_argument("--snapshot", default=None, metavar="PATH", help="also dump the propagated grid")
    pc.set_defaults(func=cmd_propagate_check)
    subs["propagate-check"] = pc

    un = sub.add_parser("units", help="convert a physical setup to dimensionless variables")
    un.add_argument("--a", type=float, required=False, default=None, help="packet width (m)")
    un.add_argument("--d", type=float, required=False, default=None, help="detector radius (m)")
    un.add_argument("--mass", type=float, default=ELECTRON_MASS)
    un.add_argument("--hbar", type=float, default=HBAR)
    un.add_argument("--t-phys", type=float, default=0.0)
    un.add_argument("--r-phys", type=float, default=0.0)
    un.add_argument("--R0", type=float, default=1.0, help="dimensionless start radius for v_inf")
    un.add_argument("--out", default="units.json")
    un.set_defaults(func=cmd_units)
    subs["units"] = un

    for p in subs.values():
        _add_common(p)
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if isinstance(payload, dict) and isinstance(payload.get("config"), dict):
        payload = payload["config"]
    if not isinstance(payload, dict):
        raise UsageError("config file must hold a JSON object")
    return payload


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _load_config(args.config)
        sub = subs[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**{k: v for k, v in values.items() if k not in {"config", "manifest"}})
        args = parser.parse_args(argv)
    return args


def run(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    if args.command == "units" and (args.a is None or args.d is None):
        raise UsageError("units needs --a and --d")
    started = time.perf_counter()
    written = args.func(args)
    seed = getattr(args, "seed", None)
    write_manifest(args, written, time.perf_counter() - started, seed)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # argparse reports usage errors (2) and --help (0) this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ArithmeticError, DegenerateFieldError) as exc:
        print(f"bohmfpt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, DomainError, ConfigurationError) as exc:
        print(f"bohmfpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bohmfpt: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
