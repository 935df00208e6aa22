"""The three experiment families and the time-budget protocol used to
compare policies.

The budget is simulated time (sum of round latencies). By default it is the
first time at which the seed-averaged DAGSA accuracy curve, for the
reference configuration, reaches 95% of DAGSA's plateau accuracy.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import SimConfig
from .sim import (ExperimentSpec, Simulation, accuracy_at_budget, cell_summary, make_data,
                  plateau_accuracy, simulate, write_csv)

EXPERIMENTS = ("policies", "hetero-bw", "mobility")
ALL_POLICIES = ("dagsa", "rs", "ub", "fedcs-low", "fedcs-high", "sa")
MOBILITY_SPEEDS = (0.0, 5.0, 10.0, 20.0, 40.0)
DEFAULT_SEEDS = (1, 2, 3, 4, 5)
REFERENCE_ROUNDS = 40
PLATEAU_FRACTION = 0.95
PLATEAU_TAIL = 0.25


def mean_accuracy_at(sims: Sequence[Simulation], budget_s: float) -> float:
    return float(np.mean([accuracy_at_budget(s.records, budget_s, s.initial_accuracy) for s in sims]))


def plateau_budget(sims: Sequence[Simulation], fraction: float = PLATEAU_FRACTION,
                   tail: float = PLATEAU_TAIL) -> tuple[float, float]:
    """``(budget_s, plateau)`` for a set of same-policy runs over several seeds.

    The plateau is the seed mean of the tail-average accuracy; the budget is
    the earliest round-completion time at which the seed-mean
    accuracy-at-budget reaches ``fraction`` of it.
    """
    plateau = float(np.mean([plateau_accuracy(s.records, tail) for s in sims]))
    for t in sorted(r.cumulative_time_s for s in sims for r in s.records):
        if mean_accuracy_at(sims, t) >= fraction * plateau:
            return t, plateau
    return max(s.cumulative_time_s for s in sims), plateau


def reference_budget(config: SimConfig, seeds: Sequence[int] = DEFAULT_SEEDS,
                     rounds: int = REFERENCE_ROUNDS) -> tuple[float, float, list[Simulation]]:
    sims = [simulate(config.replace(master_seed=s), "dagsa", num_rounds=rounds) for s in seeds]
    budget, plateau = plateau_budget(sims)
    return budget, plateau, sims


def run_grid(config: SimConfig, policies: Sequence[str], seeds: Sequence[int],
             num_rounds: int | None, time_budget_s: float | None) -> list[Simulation]:
    sims = []
    for seed in seeds:
        cfg = config.replace(master_seed=seed)
        data = make_data(cfg)
        for policy in policies:
            sims.append(simulate(cfg, policy, num_rounds, time_budget_s, data=data))
    return sims


def _write(sims, budget, out_dir: Path, name: str, extra: dict) -> dict:
    summary = {"experiment": name, "time_budget_s": budget, **extra,
               "cells": [cell_summary(s, budget) for s in sims]}
    write_csv(sims, out_dir / f"{name}.csv")
    (out_dir / f"{name}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def sweep(experiment: str, config: SimConfig, out_dir, seeds: Sequence[int] = DEFAULT_SEEDS,
          num_rounds: int = REFERENCE_ROUNDS, time_budget_s: float | None = None) -> list[dict]:
    """Run one experiment family and write ``<name>.csv`` / ``<name>.json``
    files into ``out_dir``.

    ``policies`` compares every policy on ``config``; ``hetero-bw`` does the
    same with heterogeneous BS bandwidths; ``mobility`` runs DAGSA at each of
    :data:`MOBILITY_SPEEDS`. Without an explicit ``time_budget_s`` the budget
    comes from the DAGSA cells (the v=20 m/s cells for ``mobility``).
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise OSError(f"output directory {out_dir} does not exist")
    if experiment in ("policies", "hetero-bw"):
        cfg = config.replace(heterogeneous_bw=True, bs_bandwidth_mhz=None) if experiment == "hetero-bw" else config
        sims = run_grid(cfg, ALL_POLICIES, seeds, num_rounds, None)
        budget = time_budget_s
        if budget is None:
            budget, _ = plateau_budget([s for s in sims if s.policy_name == "dagsa"])
        return [_write(sims, budget, out_dir, experiment, {"speed_mps": cfg.speed_mps})]

    runs = {v: run_grid(config.replace(speed_mps=v), ("dagsa",), seeds, num_rounds, None) for v in MOBILITY_SPEEDS}
    budget = time_budget_s
    if budget is None:
        budget, _ = plateau_budget(runs[20.0])
    return [_write(runs[v], budget, out_dir, f"mobility_v{v:g}", {"speed_mps": v}) for v in MOBILITY_SPEEDS]


__all__ = ["ALL_POLICIES", "DEFAULT_SEEDS", "EXPERIMENTS", "ExperimentSpec", "MOBILITY_SPEEDS",
           "mean_accuracy_at", "plateau_budget", "reference_budget", "run_grid", "sweep"]
