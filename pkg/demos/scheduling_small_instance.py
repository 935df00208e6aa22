"""
Greedy scheduling against the exhaustive optimum
================================================

On six users and two BSs every assignment can be enumerated, so the greedy
schedule can be checked against the true minimum round latency.
"""

import numpy as np

from flmob.core import SimConfig
from flmob.scheduler import POLICIES
from flmob.sim import oracle_solve, random_instance

config = SimConfig(num_users=6, num_bs=2, rho1=0.0, rho2=0.5)

ratios = []
for seed in range(20):
    best, optimum = oracle_solve(random_instance(config, seed))
    greedy = POLICIES["dagsa"](random_instance(config, seed))
    ratios.append(greedy.round_latency / best)
    if seed < 3:
        print(f"seed {seed}: optimum {best:.3f} s {optimum.assignments}  "
              f"greedy {greedy.round_latency:.3f} s {greedy.assignments}")

print(f"\nlatency ratio over 20 instances: mean {np.mean(ratios):.3f}, worst {np.max(ratios):.3f}")

# The baselines on one instance, for scale.
for name, policy in POLICIES.items():
    sched = policy(random_instance(config, 0))
    print(f"{name:>10}: {sched.num_selected} users, {sched.round_latency:.3f} s")
