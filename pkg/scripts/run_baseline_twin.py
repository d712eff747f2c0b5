#!/usr/bin/env python3
"""Run the baseline twin experiment and persist everything under out/baseline.

Equivalent to `nudgelab twin --out out/baseline`, kept as a script so the
baseline numbers behind the frozen acceptance thresholds are one command away.
"""

from pathlib import Path

from nudgelab.config import ExperimentConfig
from nudgelab.harness import run_twin


def main():
    out = Path("out/baseline")
    report = run_twin(ExperimentConfig(), out_dir=out)
    print(f"outputs written to {out}/")
    for key in (
        "re_initial",
        "re_assim_end",
        "re_forecast_end",
        "sync_ratio",
        "growth_ratio",
        "envelope_required",
        "decay_rate",
        "decay_floor",
        "interp_sup_err_r",
        "interp_sup_err_U",
        "data_norm",
    ):
        print(f"{key:>20}: {report.values[key]}")
    for name, ok in report.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
