"""
Accuracy against simulated time
===============================

Fifty users, eight BSs, Non-IID data. Each policy trains the same softmax
model; what differs is who uploads each round and how long that takes.
"""

import numpy as np

from flmob.core import SimConfig
from flmob.experiments import ALL_POLICIES
from flmob.sim import accuracy_at_budget, make_data, simulate

config = SimConfig(master_seed=1)
data = make_data(config)

runs = {p: simulate(config, p, num_rounds=15, data=data) for p in ALL_POLICIES}

print(f"{'policy':>10} {'mean round (s)':>15} {'15 rounds (s)':>14} {'acc @1.2s':>10} {'acc @4s':>8}")
for name, sim in runs.items():
    lat = np.mean([r.schedule.round_latency for r in sim.records])
    print(f"{name:>10} {lat:15.3f} {sim.cumulative_time_s:14.2f} "
          f"{accuracy_at_budget(sim.records, 1.2, sim.initial_accuracy):10.3f} "
          f"{accuracy_at_budget(sim.records, 4.0, sim.initial_accuracy):8.3f}")

# The participation floor: every user keeps up with rho1 of the rounds.
counts = runs["dagsa"].ledger.counts
print(f"\nDAGSA participation after 15 rounds: min {counts.min()}, max {counts.max()}")
