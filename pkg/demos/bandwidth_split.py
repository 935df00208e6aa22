"""
Splitting one base station's bandwidth
======================================

Users on the same BS finish at the same instant under the optimal split, and
the slowest user stops dictating the round as it would under an even split.
"""

import numpy as np

from flmob.bandwidth import BsProblem, even_split_latency, finish_times, optimal_allocation, optimal_time

# Three users: one computes slowly, one has a poor channel.
problem = BsProblem(bs_bandwidth_hz=1e6,
                    comp_latency_s=np.array([0.10, 0.40, 0.15]),
                    spectral_eff=np.array([4.0, 3.0, 0.8]),
                    model_size_bits=1e6)

t_star = optimal_time(problem)
bw = optimal_allocation(problem, t_star)
print(f"optimal finish time  {t_star:.4f} s")
print("bandwidth (MHz)     ", np.round(bw / 1e6, 4))
print("per-user finish (s) ", np.round(finish_times(problem, bw), 6))
print(f"even split would take {even_split_latency(problem):.4f} s")

# The poor-channel user gets most of the band; dropping it frees the rest.
lighter = BsProblem(1e6, problem.comp_latency_s[:2], problem.spectral_eff[:2], 1e6)
print(f"\nwithout user 2: {optimal_time(lighter):.4f} s")
