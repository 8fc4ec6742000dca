"""Closed-form holding delays and their Monte Carlo oracles.

Buses released from the corridor entrance at fixed minimum headways wait, in
expectation, like the maximum of j independent Gaussians.  This script prints
the closed-form coefficient against the order-statistic oracle, shows the
slow unbounded growth of the cumulative means, and checks the release-rule
recursion directly.
"""

import numpy as np

from corridorsim import (
    avg_holding_delay,
    expected_holding_delay,
    holding_coefficient,
    mc_holding_mean,
    mc_max_mean,
)

rng = np.random.default_rng(1)

print("coefficient vs E[max of j standard normals], 200k draws")
print(f"{'j':>6} {'closed form':>12} {'mc oracle':>12}")
for j in (1, 2, 10, 50, 100, 300):
    print(f"{j:>6} {holding_coefficient(j):>12.4f} {mc_max_mean(j, 200_000, rng):>12.4f}")

print("\ncumulative mean coefficient grows without bound, slowly:")
for m in (10, 100, 1_000, 10_000):
    print(f"  first {m:>6} buses: {avg_holding_delay(m, 1.0, 1.0):.3f}")

print("\nline with a 200 s headway, arrival spread 0.64 of it:")
print(f"  expected hold of bus 50:   {expected_holding_delay(50, 0.64, 200.0):7.1f} s")
print(f"  mean over buses 1..50:     {avg_holding_delay(50, 0.64, 200.0):7.1f} s")
sim = mc_holding_mean(50, 0.64, 200.0, reps=20_000, rng=rng)
print(f"  release-recursion MC:      {sim:7.1f} s (scheduled-order release)")
swap = mc_holding_mean(50, 0.64, 200.0, reps=20_000, rng=rng, swap=True)
print(f"  with index swapping:       {swap:7.1f} s (what the corridor does)")
