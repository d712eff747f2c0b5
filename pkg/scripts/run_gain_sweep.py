#!/usr/bin/env python3
"""Gain sweep probing the two-term decay bound: density gains 10..100 with
the velocity gain held at four times the density gain.

Uses the short assimilation window where every point is decay-dominated, the
same configuration the acceptance suite freezes; see notes in the README.
"""

from pathlib import Path

from nudgelab.config import ExperimentConfig, SolverConfig, TimelineConfig
from nudgelab.harness import run_sweep


def main():
    cfg = ExperimentConfig(
        timeline=TimelineConfig(t_minus=-0.5, t_assim_end=0.06, t_plus=0.08),
        solver=SolverConfig(report_interval=2e-4),
    )
    sweep = run_sweep(cfg, "lambda_rho", [10.0, 25.0, 50.0, 100.0], out_dir=Path("out/gain_sweep"))
    print(f"{'lambda_rho':>10} {'lambda_u':>9} {'rate':>9} {'floor':>11} {'r^2':>7} {'sync':>10}")
    for value, point, err in zip(sweep.values, sweep.points, sweep.errors):
        if err is not None:
            print(f"{value:>10g}  failed: {err}")
            continue
        d = point.decay
        print(
            f"{value:>10g} {point.config.nudging.lambda_u:>9g} "
            f"{d.rate:>9.2f} {d.floor:>11.3e} {d.r_squared:>7.4f} "
            f"{point.values['sync_ratio']:>10.2e}"
        )
    print(f"floor non-increasing: {sweep.floor_non_increasing}")
    print(f"rate  non-decreasing: {sweep.rate_non_decreasing}")
    return 0 if (sweep.floor_non_increasing and sweep.rate_non_decreasing) else 1


if __name__ == "__main__":
    raise SystemExit(main())
