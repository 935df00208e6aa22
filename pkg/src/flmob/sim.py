"""Round-by-round simulation, experiment harness and the exhaustive oracle.

A round runs, in order: mobility step, channel snapshot, compute-latency
draws, scheduling policy, ledger update, local training of the selected users
from the broadcast global model, weighted aggregation and test evaluation.
Download latency and BS-to-server backhaul are taken as zero, so the round
latency is the slowest BS's optimal finish time.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import channel, fl, mobility
from .core import RoundRecord, Schedule, SimConfig, derive_stream
from .scheduler import (FairnessLedger, PolicyInput, get_policy, min_selected, necessary_set,
                        optimal_schedule, update_ledger)

CSV_COLUMNS = ("seed", "policy", "round", "round_latency_s", "cumulative_time_s", "accuracy",
               "num_selected", "min_participation_count", "per_bs_user_counts")

ACCURACY_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.85, 0.9)
MAX_ROUNDS = 100_000


# --------------------------------------------------------------------------
# simulation state

@dataclass
class Simulation:
    """Mutable per-(seed, policy) simulation state."""

    config: SimConfig
    policy_name: str
    bss: list
    positions: np.ndarray
    headings: np.ndarray
    ledger: FairnessLedger
    train: fl.Dataset
    test: fl.Dataset
    user_data: list
    model: fl.ModelParams
    initial_accuracy: float
    fixed_comp_latency: np.ndarray | None = None
    round_index: int = 0
    cumulative_time_s: float = 0.0
    previous_latency: float | None = None
    records: list = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.master_seed

    @property
    def bs_positions(self) -> np.ndarray:
        return np.array([b.position for b in self.bss])

    @property
    def bs_bandwidth_mhz(self) -> np.ndarray:
        return np.array([b.bandwidth_mhz for b in self.bss])


def make_data(config: SimConfig, iid: bool = False):
    """Synthetic train/test sets and the per-user index partition for a seed."""
    train, test = fl.generate_synthetic(derive_stream(config.master_seed, "datagen", 0),
                                        config.num_features, config.train_size, config.test_size,
                                        config.class_separation)
    part_stream = derive_stream(config.master_seed, "datagen", 0, 1)
    if iid:
        parts = fl.partition_iid(train, config.num_users, part_stream)
    else:
        parts = fl.partition_noniid(train, config.num_users, config.shards_per_user, part_stream)
    return train, test, parts


def init_simulation(config: SimConfig, policy: str, data=None, iid: bool = False) -> Simulation:
    get_policy(policy)
    seed = config.master_seed
    bss = channel.place_base_stations(config, derive_stream(seed, "placement", 0, 0))
    positions = mobility.initial_positions(derive_stream(seed, "placement", 0, 2),
                                           config.num_users, config.area_side_m)
    train, test, parts = data if data is not None else make_data(config, iid)
    model = fl.ModelParams.zeros(train.num_features)
    fixed = None
    if config.comp_latency_mode == "fixed-per-user":
        fixed = derive_stream(seed, "compute", 0, 1).uniform(*config.comp_latency_range_s, config.num_users)
    return Simulation(config=config, policy_name=policy, bss=bss, positions=positions,
                      headings=np.zeros(config.num_users), ledger=FairnessLedger.fresh(config.num_users),
                      train=train, test=test, user_data=[train.subset(p) for p in parts], model=model,
                      initial_accuracy=fl.evaluate(model, test), fixed_comp_latency=fixed)


def draw_comp_latencies(sim: Simulation, n: int) -> np.ndarray:
    if sim.fixed_comp_latency is not None:
        return sim.fixed_comp_latency.copy()
    return derive_stream(sim.seed, "compute", n).uniform(*sim.config.comp_latency_range_s, sim.config.num_users)


def policy_input(sim: Simulation, n: int) -> PolicyInput:
    """Advance mobility for round ``n`` and build the scheduler input."""
    cfg = sim.config
    dt = mobility.round_dt(cfg, sim.previous_latency)
    headings = mobility.draw_headings(derive_stream(sim.seed, "mobility", n), cfg.num_users)
    sim.positions, sim.headings = mobility.step_positions(sim.positions, cfg.speed_mps * dt,
                                                          cfg.area_side_m, headings)
    snap = channel.snapshot(sim.positions, sim.bs_positions, derive_stream(sim.seed, "fading", n))
    return PolicyInput(snapshot=snap, comp_latencies=draw_comp_latencies(sim, n), ledger=sim.ledger,
                       config=cfg, selection_stream=derive_stream(sim.seed, "selection", n),
                       bs_bandwidth_mhz=sim.bs_bandwidth_mhz)


def run_round(sim: Simulation, policy: Callable[[PolicyInput], Schedule] | None = None) -> RoundRecord:
    cfg = sim.config
    n = sim.round_index
    policy = policy or get_policy(sim.policy_name)
    inp = policy_input(sim, n)
    schedule = policy(inp)
    sim.ledger = update_ledger(sim.ledger, schedule)

    selected = schedule.selected
    if selected:
        streams = [derive_stream(sim.seed, "shuffle", n, i) for i in selected]
        locals_ = fl.local_train_many(sim.model, [sim.user_data[i] for i in selected], cfg.local_epochs,
                                      cfg.learning_rate, streams, cfg.batch_size)
        sim.model = fl.aggregate([(m, len(sim.user_data[i]), True) for m, i in zip(locals_, selected)])
        latency = schedule.round_latency
    else:
        latency = 0.0
    accuracy = fl.evaluate(sim.model, sim.test)

    sim.cumulative_time_s += latency
    sim.previous_latency = latency
    record = RoundRecord(round_index=n, schedule=schedule, accuracy=accuracy,
                         cumulative_time_s=sim.cumulative_time_s,
                         participation_counts=sim.ledger.counts.copy())
    sim.records.append(record)
    sim.round_index += 1
    return record


def simulate(config: SimConfig, policy: str, num_rounds: int | None = None, time_budget_s: float | None = None,
             data=None, iid: bool = False) -> Simulation:
    """Run one cell until ``num_rounds`` rounds or until the simulated time
    exceeds ``time_budget_s``, whichever comes first."""
    if num_rounds is None and time_budget_s is None:
        raise ValueError("need num_rounds or time_budget_s")
    sim = init_simulation(config, policy, data, iid)
    limit = MAX_ROUNDS if num_rounds is None else num_rounds
    while sim.round_index < limit:
        if time_budget_s is not None and sim.cumulative_time_s > time_budget_s:
            break
        run_round(sim)
    return sim


# --------------------------------------------------------------------------
# metrics

def accuracy_at_budget(records: Sequence[RoundRecord], budget_s: float, initial_accuracy: float) -> float:
    """Accuracy of the last round finished within the simulated-time budget."""
    acc = initial_accuracy
    for r in records:
        if r.cumulative_time_s > budget_s:
            break
        acc = r.accuracy
    return acc


def time_to_accuracy(records: Sequence[RoundRecord], target: float) -> float | None:
    for r in records:
        if r.accuracy >= target:
            return r.cumulative_time_s
    return None


def plateau_accuracy(records: Sequence[RoundRecord], tail_fraction: float = 0.25) -> float:
    tail = max(1, int(math.ceil(len(records) * tail_fraction)))
    return float(np.mean([r.accuracy for r in records[-tail:]]))


# --------------------------------------------------------------------------
# experiments

@dataclass
class ExperimentSpec:
    config: SimConfig
    policies: Sequence[str]
    seeds: Sequence[int]
    num_rounds: int | None = None
    time_budget_s: float | None = None
    output_path: str | Path | None = None
    iid: bool = False

    def __post_init__(self):
        if isinstance(self.policies, str):
            self.policies = (self.policies,)
        if not self.seeds:
            raise ValueError("need at least one seed")
        if (self.num_rounds is None or self.num_rounds < 1) and self.time_budget_s is None:
            raise ValueError("need num_rounds >= 1 or a time budget")
        for p in self.policies:
            get_policy(p)


def record_row(seed: int, policy: str, r: RoundRecord) -> list:
    counts = [len(r.schedule.assignments.get(k, ())) for k in sorted(r.schedule.assignments)]
    return [seed, policy, r.round_index, repr(float(r.schedule.round_latency)),
            repr(float(r.cumulative_time_s)), repr(float(r.accuracy)), r.schedule.num_selected,
            int(r.participation_counts.min()), ";".join(map(str, counts))]


def cell_summary(sim: Simulation, budget_s: float | None) -> dict:
    recs = sim.records
    out = {
        "seed": sim.seed,
        "policy": sim.policy_name,
        "rounds": len(recs),
        "initial_accuracy": sim.initial_accuracy,
        "final_accuracy": recs[-1].accuracy if recs else sim.initial_accuracy,
        "final_time_s": sim.cumulative_time_s,
        "mean_round_latency_s": float(np.mean([r.schedule.round_latency for r in recs])) if recs else 0.0,
        "time_to_accuracy_s": {f"{a:g}": time_to_accuracy(recs, a) for a in ACCURACY_THRESHOLDS},
    }
    if budget_s is not None:
        out["time_budget_s"] = budget_s
        out["accuracy_at_budget"] = accuracy_at_budget(recs, budget_s, sim.initial_accuracy)
    return out


def run_cells(spec: ExperimentSpec) -> list[Simulation]:
    sims = []
    for seed in spec.seeds:
        cfg = spec.config.replace(master_seed=seed)
        data = make_data(cfg, spec.iid)
        for policy in spec.policies:
            sims.append(simulate(cfg, policy, spec.num_rounds, spec.time_budget_s, data=data))
    return sims


def write_csv(sims: Iterable[Simulation], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for sim in sims:
        for r in sim.records:
            w.writerow(record_row(sim.seed, sim.policy_name, r))
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every (seed, policy) cell; write the per-round CSV and a JSON
    summary next to it when ``output_path`` is set. Returns the summary."""
    out = Path(spec.output_path) if spec.output_path is not None else None
    if out is not None and not out.parent.exists():
        raise OSError(f"output directory {out.parent} does not exist")
    sims = run_cells(spec)
    summary = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(spec.config).items()},
        "policies": list(spec.policies),
        "seeds": list(spec.seeds),
        "num_rounds": spec.num_rounds,
        "time_budget_s": spec.time_budget_s,
        "cells": [cell_summary(s, spec.time_budget_s) for s in sims],
    }
    if out is not None:
        write_csv(sims, out)
        summary_path(out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# --------------------------------------------------------------------------
# exhaustive oracle

ORACLE_MAX_USERS = 8
ORACLE_MAX_BS = 3


def oracle_solve(inp: PolicyInput, rho2: float | None = None) -> tuple[float, Schedule]:
    """Minimum round latency over every assignment of users to
    {unselected} + BSs that keeps the necessary users and enough users
    selected. Returns the latency and the optimal schedule (first found in
    enumeration order on ties)."""
    n, m = inp.num_users, inp.num_bs
    if n > ORACLE_MAX_USERS or m > ORACLE_MAX_BS:
        raise ValueError(f"oracle is limited to N <= {ORACLE_MAX_USERS}, M <= {ORACLE_MAX_BS}")
    rho2 = inp.config.rho2 if rho2 is None else rho2
    need = min(n, math.ceil(n * rho2 - 1e-9))
    required = necessary_set(inp.ledger, inp.config.rho1)

    # T(S) for every subset S (bitmask) of users on every BS
    table = np.empty((m, 1 << n))
    for k in range(m):
        for mask in range(1 << n):
            table[k, mask] = inp.bs_time(k, [i for i in range(n) if mask >> i & 1])

    best, best_assign = math.inf, None
    for assign in itertools.product(range(m + 1), repeat=n):      # 0 = unselected, k+1 = BS k
        chosen = [i for i, a in enumerate(assign) if a]
        if len(chosen) < need or any(not assign[i] for i in required):
            continue
        masks = [0] * m
        for i, a in enumerate(assign):
            if a:
                masks[a - 1] |= 1 << i
        t = max(table[k, masks[k]] for k in range(m))
        if t < best:
            best, best_assign = t, assign
    if best_assign is None:
        raise ValueError("no feasible schedule")
    groups = {k: [i for i, a in enumerate(best_assign) if a == k + 1] for k in range(m)}
    return best, optimal_schedule(inp, groups)


def random_instance(config: SimConfig, seed: int, ledger: FairnessLedger | None = None) -> PolicyInput:
    """A one-round scheduling instance drawn from the simulator's own streams."""
    cfg = config.replace(master_seed=seed)
    bss = channel.place_base_stations(cfg, derive_stream(seed, "placement", 0, 0))
    pos = mobility.initial_positions(derive_stream(seed, "placement", 0, 2), cfg.num_users, cfg.area_side_m)
    snap = channel.snapshot(pos, [b.position for b in bss], derive_stream(seed, "fading", 0))
    comp = derive_stream(seed, "compute", 0).uniform(*cfg.comp_latency_range_s, cfg.num_users)
    return PolicyInput(snapshot=snap, comp_latencies=comp, ledger=ledger or FairnessLedger.fresh(cfg.num_users),
                       config=cfg, selection_stream=derive_stream(seed, "selection", 0),
                       bs_bandwidth_mhz=np.array([b.bandwidth_mhz for b in bss]))


__all__ = [
    "CSV_COLUMNS", "ExperimentSpec", "Simulation", "accuracy_at_budget", "cell_summary", "init_simulation",
    "make_data", "min_selected", "oracle_solve", "plateau_accuracy", "random_instance", "read_csv",
    "run_cells", "run_experiment", "run_round", "simulate", "summary_path", "time_to_accuracy", "write_csv",
]
