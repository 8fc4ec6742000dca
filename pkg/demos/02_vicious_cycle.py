"""The vicious cycle, unveiled and abated.

Queueing at stops inflates headway variation, which lengthens queues farther
downstream: without control, per-stop delay w^s and arrival-headway variation
both climb along the corridor.  Holding buses at the entrance to a minimum
headway of 0.9 H breaks the feedback.  Uses matched seeds for the comparison;
a handful of replications is enough to see the shape.
"""

import dataclasses

import numpy as np

from corridorsim import (
    ReplicationSettings,
    bundled_scenario_path,
    load_scenario,
    run_experiment,
)

REPS = 6

scenario = load_scenario(bundled_scenario_path("gbrt"))
controller = ReplicationSettings(REPS, REPS, 1e9)

runs = {}
for name in ("none", "min_headway"):
    sc = dataclasses.replace(
        scenario, strategy=dataclasses.replace(scenario.strategy, name=name, eta=0.9)
    )
    runs[name] = run_experiment(sc, controller, jobs=2).metrics

base, held = runs["none"], runs["min_headway"]
print(f"{REPS} replications each, matched seeds; times in minutes\n")
print(f"{'stop':>4} {'w do-nothing':>13} {'w holding':>10} {'arrCV none':>11} {'arrCV held':>11}")
for i, s in enumerate(base.stops):
    print(
        f"{s:>4} {base.w_min[i]:>13.3f} {held.w_min[i]:>10.3f}"
        f" {base.arrival_cv[i]:>11.3f} {held.arrival_cv[i]:>11.3f}"
    )
print(f"\nmean hold per held bus: {held.mean_hold_held_min:.2f} min")
print(f"cumulative delay at stop 10: {base.W_min[-1]:.2f} (none) vs {held.W_min[-1]:.2f} (holding)")
print(f"grand departure-headway CV:  {base.grand_cv:.3f} (none) vs {held.grand_cv:.3f} (holding)")
print("\nw^s dips at the lightly-used stops 3, 8 and 10 but trends upward;")
print("holding flattens the whole profile.")
