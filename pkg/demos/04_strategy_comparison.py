"""Seven holding strategies head to head.

Grand departure-headway CV (regularity) against mean cumulative corridor
delay, all on the pre-pandemic corridor with schedule-based predictions and
matched seeds.  The minimum-headway rule with eta=0.9 wins on regularity and
is competitive on delay without needing any prediction at all.
"""

import dataclasses

from corridorsim import (
    ReplicationSettings,
    bundled_scenario_path,
    load_scenario,
    run_experiment,
)

REPS = 6

scenario = load_scenario(bundled_scenario_path("gbrt_prepandemic"))
controller = ReplicationSettings(REPS, REPS, 1e9)

CONFIGS = [
    ("none", {}),
    ("min_headway", dict(eta=0.9)),
    ("schedule_based", {}),
    ("daganzo09", dict(alpha=0.5)),
    ("xuan11", dict(alpha=0.5)),
    ("daganzo11", dict(alpha=0.3)),
    ("bartholdi12", dict(alpha=0.5)),
    ("berrebi15", dict(horizon=5)),
]

print(f"{REPS} replications per strategy, matched seeds\n")
print(f"{'strategy':<16} {'grand CV':>9} {'cum delay':>10} {'hold/bus':>9}")
for name, kw in CONFIGS:
    sc = dataclasses.replace(
        scenario, strategy=dataclasses.replace(scenario.strategy, name=name, **kw)
    )
    m = run_experiment(sc, controller, jobs=2).metrics
    print(
        f"{name:<16} {m.grand_cv:>9.3f} {m.W_min[-1]:>9.2f}m"
        f" {m.mean_hold_held_min:>8.2f}m"
    )
print("\nEvery strategy beats doing nothing on headway regularity; the")
print("prediction-hungry rules pay for schedule-only forecasts.")
