"""Per-round user selection, BS assignment and bandwidth allocation policies.

``dagsa`` is the delay-aware greedy search; ``randomly_select``,
``uniform_bandwidth``, ``fedcs`` and ``select_all`` are the baselines it is
compared against. Every policy takes a :class:`PolicyInput` and returns a
:class:`~flmob.core.Schedule`.

Tie-breaking is deterministic everywhere: the lowest user id wins among equal
gains and the lowest BS id among equally good BSs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .bandwidth import BsProblem, solve_finish_time, optimal_allocation, even_split_latency
from .channel import spectral_efficiency
from .core import ChannelSnapshot, Schedule, SimConfig

FEDCS_LOW_S = 0.6
FEDCS_HIGH_S = 1.0


@dataclass
class FairnessLedger:
    counts: np.ndarray
    round_index: int = 0

    @classmethod
    def fresh(cls, num_users: int) -> "FairnessLedger":
        return cls(np.zeros(num_users, dtype=np.int64), 0)


@dataclass
class PolicyInput:
    snapshot: ChannelSnapshot
    comp_latencies: np.ndarray
    ledger: FairnessLedger
    config: SimConfig
    selection_stream: np.random.Generator
    bs_bandwidth_mhz: np.ndarray | None = None
    # log2(1 + SNR) per (user, BS); derived from the snapshot unless given
    spectral_eff: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n, m = self.snapshot.gains.shape
        self.comp_latencies = np.asarray(self.comp_latencies, dtype=float)
        if self.comp_latencies.shape != (n,) or len(self.ledger.counts) != n:
            raise ValueError("comp_latencies and ledger must have one entry per user")
        if self.bs_bandwidth_mhz is None:
            self.bs_bandwidth_mhz = self.config.resolved_bs_bandwidth_mhz()
        self.bs_bandwidth_mhz = np.asarray(self.bs_bandwidth_mhz, dtype=float)
        if self.bs_bandwidth_mhz.shape != (m,):
            raise ValueError("need one bandwidth per BS")
        if self.spectral_eff is None:
            self.spectral_eff = spectral_efficiency(self.snapshot.gains, self.config)
        self.spectral_eff = np.asarray(self.spectral_eff, dtype=float)
        if self.spectral_eff.shape != (n, m):
            raise ValueError("spectral_eff must be (num_users, num_bs)")

    @property
    def num_users(self) -> int:
        return self.snapshot.gains.shape[0]

    @property
    def num_bs(self) -> int:
        return self.snapshot.gains.shape[1]

    def bs_time(self, k: int, users) -> float:
        """Optimal finish time T(S_k) for ``users`` on BS ``k``."""
        users = list(users)
        if not users:
            return 0.0
        return solve_finish_time(self.bs_bandwidth_mhz[k] * 1e6, self.comp_latencies[users],
                                 self.spectral_eff[users, k], self.config.model_size_bits)

    def bs_problem(self, k: int, users) -> BsProblem:
        users = list(users)
        return BsProblem(self.bs_bandwidth_mhz[k] * 1e6, self.comp_latencies[users],
                         self.spectral_eff[users, k], self.config.model_size_bits, tuple(users))


def best_bs(gains: np.ndarray, i: int) -> int:
    return int(np.argmax(gains[i]))   # argmax returns the first (lowest id) maximum


def best_user(gains: np.ndarray, k: int, candidates) -> int:
    return max(sorted(candidates), key=lambda i: (gains[i, k], -i))


def min_selected(config: SimConfig, num_users: int | None = None) -> int:
    n = config.num_users if num_users is None else num_users
    return min(n, math.ceil(n * config.rho2 - 1e-9))


# --------------------------------------------------------------------------
# schedule assembly

def optimal_schedule(inp: PolicyInput, assignments: dict[int, list[int]]) -> Schedule:
    """Per-BS optimal bandwidth split for a fixed assignment."""
    sched = Schedule(assignments={k: tuple(sorted(assignments.get(k, ()))) for k in range(inp.num_bs)})
    for k, users in sched.assignments.items():
        t = inp.bs_time(k, users)
        sched.per_bs_latency[k] = t
        if users:
            bw = optimal_allocation(inp.bs_problem(k, users), t)
            sched.bandwidths.update({i: float(b) / 1e6 for i, b in zip(users, bw)})
    sched.round_latency = max(sched.per_bs_latency.values(), default=0.0)
    return sched


def even_schedule(inp: PolicyInput, assignments: dict[int, list[int]]) -> Schedule:
    """Per-BS even bandwidth split for a fixed assignment."""
    sched = Schedule(assignments={k: tuple(sorted(assignments.get(k, ()))) for k in range(inp.num_bs)})
    for k, users in sched.assignments.items():
        if users:
            sched.per_bs_latency[k] = even_split_latency(inp.bs_problem(k, users))
            share = inp.bs_bandwidth_mhz[k] / len(users)
            sched.bandwidths.update({i: float(share) for i in users})
        else:
            sched.per_bs_latency[k] = 0.0
    sched.round_latency = max(sched.per_bs_latency.values(), default=0.0)
    return sched


def assign_to_best(inp: PolicyInput, users) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {k: [] for k in range(inp.num_bs)}
    for i in sorted(users):
        out[best_bs(inp.snapshot.gains, i)].append(i)
    return out


# --------------------------------------------------------------------------
# DAGSA

def necessary_set(ledger: FairnessLedger, rho1: float) -> set[int]:
    """Users whose participation so far is below rho1 * n."""
    return {int(i) for i in np.flatnonzero(ledger.counts < rho1 * ledger.round_index)}


def dagsa(inp: PolicyInput, trace: list | None = None) -> Schedule:
    """Delay-aware greedy search.

    Necessary users are placed first, each opening at its best BS and setting
    the latency threshold, then every BS absorbs more of them for as long as
    its optimal time stays under the threshold. The remaining users are then
    packed the same way until enough are selected; when no BS can take
    another user under the threshold, one user is forced onto a random BS and
    the threshold rises to that BS's new time.

    The threshold only ever rises. If ``trace`` is a list, every threshold
    value is appended to it.
    """
    gains = inp.snapshot.gains
    rng = inp.selection_stream
    sets: list[list[int]] = [[] for _ in range(inp.num_bs)]
    necessary = necessary_set(inp.ledger, inp.config.rho1)
    pool = set(range(inp.num_users)) - necessary
    threshold = 0.0

    def raise_threshold(t):
        nonlocal threshold
        threshold = max(threshold, t)
        if trace is not None:
            trace.append(threshold)

    def pack(k, candidates):
        while candidates:
            i = best_user(gains, k, candidates)
            if inp.bs_time(k, sets[k] + [i]) > threshold:
                break
            sets[k].append(i)
            candidates.discard(i)

    while necessary:
        i = int(rng.choice(sorted(necessary)))
        k = best_bs(gains, i)
        sets[k].append(i)
        necessary.discard(i)
        raise_threshold(inp.bs_time(k, sets[k]))
        for k in range(inp.num_bs):
            pack(k, necessary)

    target = min_selected(inp.config, inp.num_users)
    while sum(map(len, sets)) < target:
        for k in range(inp.num_bs):
            pack(k, pool)
        if sum(map(len, sets)) < target and pool:
            k = int(rng.integers(inp.num_bs))
            i = best_user(gains, k, pool)
            sets[k].append(i)
            pool.discard(i)
            raise_threshold(inp.bs_time(k, sets[k]))

    return optimal_schedule(inp, {k: s for k, s in enumerate(sets)})


# --------------------------------------------------------------------------
# baselines

def random_selection(inp: PolicyInput) -> list[int]:
    """Each user joins independently with probability rho2; redrawn until non-empty."""
    while True:
        picked = np.flatnonzero(inp.selection_stream.random(inp.num_users) < inp.config.rho2)
        if len(picked):
            return [int(i) for i in picked]


def randomly_select(inp: PolicyInput) -> Schedule:
    return optimal_schedule(inp, assign_to_best(inp, random_selection(inp)))


def uniform_bandwidth(inp: PolicyInput) -> Schedule:
    return even_schedule(inp, assign_to_best(inp, random_selection(inp)))


def fedcs(inp: PolicyInput, threshold_s: float) -> Schedule:
    """Each BS admits its own best-gain users while the even-split latency
    stays within ``threshold_s``."""
    if threshold_s <= 0:
        raise ValueError("threshold must be positive")
    gains = inp.snapshot.gains
    candidates = assign_to_best(inp, range(inp.num_users))
    chosen: dict[int, list[int]] = {}
    for k, users in candidates.items():
        ranked = sorted(users, key=lambda i: (-gains[i, k], i))
        chosen[k] = []
        for i in ranked:
            if even_split_latency(inp.bs_problem(k, chosen[k] + [i])) > threshold_s:
                break
            chosen[k].append(i)
    return even_schedule(inp, chosen)


def select_all(inp: PolicyInput) -> Schedule:
    return optimal_schedule(inp, assign_to_best(inp, range(inp.num_users)))


POLICIES: dict[str, Callable[[PolicyInput], Schedule]] = {
    "dagsa": dagsa,
    "rs": randomly_select,
    "ub": uniform_bandwidth,
    "fedcs-low": partial(fedcs, threshold_s=FEDCS_LOW_S),
    "fedcs-high": partial(fedcs, threshold_s=FEDCS_HIGH_S),
    "sa": select_all,
}


def get_policy(name: str) -> Callable[[PolicyInput], Schedule]:
    try:
        return POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def update_ledger(ledger: FairnessLedger, schedule: Schedule) -> FairnessLedger:
    counts = ledger.counts.copy()
    selected = schedule.selected
    if selected:
        counts[selected] += 1
    return FairnessLedger(counts, ledger.round_index + 1)
