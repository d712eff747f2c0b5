#!/usr/bin/env python3
"""Regenerate the measurements behind the frozen acceptance thresholds.

Prints, next to each frozen constant, the value this build actually measures:

  * baseline synchronization ratio  (frozen: sync_ratio_max = 1e-4)
  * zero-gain control ratio         (must exceed 100 * sync_ratio_max)
  * forecast envelope calibration   (frozen: envelope_gamma_max = 1.0)
  * forecast growth ratio           (frozen: forecast_growth_max = 10)
  * manufactured-solution orders, mass drift, splitting order

Run after any solver change and refresh the constants in
nudgelab.config.CalibrationConfig if the margins move.
"""

import dataclasses

from nudgelab.config import ExperimentConfig, NudgingGains
from nudgelab.harness import run_twin, validate_solver


def main():
    cfg = ExperimentConfig()
    cal = cfg.calibration
    baseline = run_twin(cfg)
    control = run_twin(
        dataclasses.replace(cfg, nudging=NudgingGains(lambda_rho=0.0, lambda_u=0.0))
    )
    print("baseline sync ratio   : %.3e  (frozen threshold %.0e)" % (
        baseline.values["sync_ratio"], cal.sync_ratio_max))
    print("control sync ratio    : %.3e  (must be >= %.0e)" % (
        control.values["sync_ratio"], 100.0 * cal.sync_ratio_max))
    print("envelope calibration  : %.3e  (frozen max %.1f)" % (
        baseline.envelope.calibration_required, cal.envelope_gamma_max))
    print("forecast growth ratio : %.3e  (frozen max %.1f)" % (
        baseline.values["growth_ratio"], cal.forecast_growth_max))
    print("gain-condition floor  : %.3e  (target epsilon %.2f)" % (
        baseline.gains.floor_estimate, cal.epsilon_target))

    val = validate_solver()
    print("manufactured orders   :", tuple(round(o, 4) for o in val.orders))
    print("mass drift            : %.3e" % val.mass_drift)
    print("splitting order       : %.3f" % val.splitting_order)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
