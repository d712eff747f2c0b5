"""Command-line interface.

Subcommands: observe (truth run + trajectory persistence), twin (full twin
experiment), sweep (one-axis parameter sweep), validate (manufactured-
solution verification), audit (recompute verdicts from a persisted twin).

Exit codes: 0 pass, 1 run failure, 2 acceptance failure, 3 config error.
The default output root is $NUDGELAB_OUT (falling back to ./out).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import ExperimentConfig, SWEEP_AXES, load_config
from .errors import BlowUpError, CapacityError, ConfigError, VacuumError
from .field import save_trajectory
from .harness import audit_twin, run_observed, run_sweep, run_twin, validate_solver

EXIT_PASS = 0
EXIT_RUN_FAILURE = 1
EXIT_ACCEPTANCE_FAILURE = 2
EXIT_CONFIG_ERROR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nudgelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="experiment config (JSON)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="override the sampler seed")
        p.add_argument("--format", choices=("csv", "json"), help="series output format")

    common(sub.add_parser("observe", help="run and persist the truth trajectory"))
    common(sub.add_parser("twin", help="run the full twin experiment"))
    p_sweep = sub.add_parser("sweep", help="twin runs along one parameter axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated list of axis values"
    )
    common(sub.add_parser("validate", help="manufactured-solution verification"))
    p_audit = sub.add_parser("audit", help="recompute verdicts from persisted output")
    p_audit.add_argument("--out", type=Path, required=True, help="twin output directory")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, sampler=dataclasses.replace(cfg.sampler, seed=args.seed)
        )
    if getattr(args, "format", None):
        cfg = dataclasses.replace(
            cfg, outputs=dataclasses.replace(cfg.outputs, format=args.format)
        )
    cfg.validate()
    return cfg


def _out_dir(args, cfg: ExperimentConfig, sub: str) -> Path:
    if args.out is not None:
        return args.out
    if cfg.outputs.directory:
        return Path(cfg.outputs.directory)
    root = os.environ.get("NUDGELAB_OUT", "out")
    return Path(root) / sub


def _cmd_observe(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg, "observe")
    out.mkdir(parents=True, exist_ok=True)
    traj = run_observed(cfg, use_cache=False)
    suffix = "csv" if cfg.outputs.format == "csv" else "bin"
    save_trajectory(out / f"trajectory.{suffix}", traj)
    meta = {
        "n_snapshots": traj.n_snapshots,
        "t_first": float(traj.times[0]),
        "t_last": float(traj.times[-1]),
        "rho_max": traj.sup_bounds.rho_max,
        "speed_max": traj.sup_bounds.speed_max,
        "forcing_max": traj.sup_bounds.forcing_max,
        "mass": float(traj.grid.dx * traj.rho[0].sum()),
    }
    (out / "observed_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    (out / "config.json").write_text(cfg.to_json() + "\n")
    print(f"observed run complete: {traj.n_snapshots} snapshots -> {out}")
    return EXIT_PASS


def _cmd_twin(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg, "twin")
    report = run_twin(cfg, out_dir=out)
    for name, ok in report.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"report written to {out}")
    return EXIT_PASS if report.passed else EXIT_ACCEPTANCE_FAILURE


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as err:
        raise ConfigError(f"bad --values list: {err}") from err
    if not values:
        raise ConfigError("--values must name at least one value")
    out = _out_dir(args, cfg, "sweep")
    report = run_sweep(cfg, args.axis, values, out_dir=out)
    for value, err in zip(report.values, report.errors):
        print(f"{args.axis}={value:g}: {'ok' if err is None else err}")
    print(
        f"floor non-increasing: {report.floor_non_increasing}; "
        f"rate non-decreasing: {report.rate_non_decreasing}"
    )
    if any(err is not None for err in report.errors):
        return EXIT_RUN_FAILURE
    return EXIT_PASS


def _cmd_validate(args) -> int:
    cfg = _load(args)
    report = validate_solver(cfg)
    print(f"spatial errors: {['%.3e' % e for e in report.errors]}")
    print(f"spatial orders: {['%.3f' % o for o in report.orders]} (need [1.8, 2.2])")
    print(f"mass drift: {report.mass_drift:.3e} (need <= 1e-10)")
    print(f"splitting order: {report.splitting_order:.3f} (need [0.6, 1.9])")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "validation.json").write_text(
            json.dumps(dataclasses.asdict(report) | {"passed": report.passed}, indent=2)
            + "\n"
        )
    print("validation PASSED" if report.passed else "validation FAILED")
    return EXIT_PASS if report.passed else EXIT_ACCEPTANCE_FAILURE


def _cmd_audit(args) -> int:
    result = audit_twin(args.out)
    for name, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if not result.ok:
        for m in result.mismatches:
            print(f"MISMATCH  {m}")
        return EXIT_ACCEPTANCE_FAILURE
    print("audit: stored verdicts reproduced")
    return EXIT_PASS if result.passed else EXIT_ACCEPTANCE_FAILURE


_COMMANDS = {
    "observe": _cmd_observe,
    "twin": _cmd_twin,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "audit": _cmd_audit,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (VacuumError, BlowUpError, CapacityError, OSError, ValueError) as err:
        print(f"run failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
