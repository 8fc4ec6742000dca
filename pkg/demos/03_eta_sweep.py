"""Shortening the holding threshold.

Releasing at slightly less than the scheduled headway (eta < 1) cuts holding
delay out of proportion to the reduction: against a backlogged lane, the
schedule-rate release never catches up, while a 10% faster release drains it.
The sweep shows cumulative-delay savings over do-nothing per stop, under
pre-pandemic (1.5x) demand.
"""

import dataclasses

from corridorsim import (
    ReplicationSettings,
    bundled_scenario_path,
    load_scenario,
    run_experiment,
    savings,
)

REPS = 6

scenario = load_scenario(bundled_scenario_path("gbrt_prepandemic"))
controller = ReplicationSettings(REPS, REPS, 1e9)


def run(name, eta=1.0):
    sc = dataclasses.replace(
        scenario, strategy=dataclasses.replace(scenario.strategy, name=name, eta=eta)
    )
    return run_experiment(sc, controller, jobs=2).metrics


baseline = run("none")
print(f"{REPS} replications per point, matched seeds\n")
print(f"{'eta':>5} {'hold/bus':>9} {'savings@5':>10} {'savings@10':>11}")
for eta in (0.8, 0.9, 1.0):
    m = run("min_headway", eta)
    gain = savings(baseline, m)
    print(f"{eta:>5} {m.mean_hold_held_min:>8.2f}m {gain[4]:>9.2f}m {gain[9]:>10.2f}m")
print("\neta=0.9 keeps most of the regularizing power at a fraction of the")
print("holding cost; eta=0.8 holds even less but regularizes less too.")
