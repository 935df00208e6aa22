"""Min-max latency bandwidth split for the users scheduled on one BS.

With user i needing ``S / (B_i g_i)`` seconds of upload after ``t_i``
seconds of compute, the best common finish time ``t*`` is the root of

    sum_i S / ((t* - t_i) g_i) = B_k,

and each user then gets ``B_i = S / ((t* - t_i) g_i)``, so that everybody
finishes together. The left-hand side falls strictly from +inf to 0 on
``(max_i t_i, inf)``, so bisection always brackets the unique root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_TOL_S = 1e-9
LOWER_OFFSET_S = 1e-12


@dataclass(frozen=True)
class BsProblem:
    bs_bandwidth_hz: float
    comp_latency_s: np.ndarray
    spectral_eff: np.ndarray          # log2(1 + SNR), bit/s/Hz
    model_size_bits: float
    user_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        tc = np.atleast_1d(np.asarray(self.comp_latency_s, dtype=float))
        g = np.atleast_1d(np.asarray(self.spectral_eff, dtype=float))
        if tc.shape != g.shape:
            raise ValueError("comp_latency_s and spectral_eff must have equal length")
        if not self.bs_bandwidth_hz > 0:
            raise ValueError("BS bandwidth must be positive")
        if np.any(g <= 0):
            raise ValueError("spectral efficiencies must be positive")
        if np.any(tc < 0):
            raise ValueError("compute latencies must be non-negative")
        object.__setattr__(self, "comp_latency_s", tc)
        object.__setattr__(self, "spectral_eff", g)
        if not self.user_ids:
            object.__setattr__(self, "user_ids", tuple(range(len(tc))))

    @classmethod
    def from_users(cls, bs_bandwidth_hz: float, users: Sequence[tuple[int, float, float]],
                   model_size_bits: float) -> "BsProblem":
        """Build from ``(user_id, comp_latency_s, spectral_eff)`` triples."""
        ids = tuple(u[0] for u in users)
        return cls(bs_bandwidth_hz, np.array([u[1] for u in users], dtype=float),
                   np.array([u[2] for u in users], dtype=float), model_size_bits, ids)

    def __len__(self):
        return len(self.comp_latency_s)


def budget_used(problem: BsProblem, t: float) -> float:
    """Total bandwidth (Hz) needed for every user to finish by ``t``."""
    return float(np.sum(problem.model_size_bits / ((t - problem.comp_latency_s) * problem.spectral_eff)))


def solve_finish_time(bandwidth_hz: float, comp_latency_s: np.ndarray, spectral_eff: np.ndarray,
                      model_size_bits: float, tol: float = DEFAULT_TOL_S) -> float:
    """Array-level kernel behind :func:`optimal_time` (no validation)."""
    if len(comp_latency_s) == 0:
        return 0.0
    if len(comp_latency_s) == 1:
        return float(comp_latency_s[0] + model_size_bits / (bandwidth_hz * spectral_eff[0]))
    need = model_size_bits / spectral_eff
    lo = float(np.max(comp_latency_s)) + LOWER_OFFSET_S
    width = 1.0
    hi = lo + width
    while np.sum(need / (hi - comp_latency_s)) >= bandwidth_hz:
        width *= 2.0
        hi = lo + width
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if np.sum(need / (mid - comp_latency_s)) >= bandwidth_hz:
            lo = mid
        else:
            hi = mid
    # the upper end never overspends the budget
    return hi


def optimal_time(problem: BsProblem, tol: float = DEFAULT_TOL_S) -> float:
    """Smallest common finish time t* for the BS; 0 for an empty user set."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return solve_finish_time(problem.bs_bandwidth_hz, problem.comp_latency_s, problem.spectral_eff,
                             problem.model_size_bits, tol)


def optimal_allocation(problem: BsProblem, t_star: float) -> np.ndarray:
    """Per-user bandwidth (Hz) that makes every user finish exactly at ``t_star``."""
    slack = t_star - problem.comp_latency_s
    if np.any(slack <= 0):
        raise ValueError("t_star must exceed every user's compute latency")
    return problem.model_size_bits / (slack * problem.spectral_eff)


def finish_times(problem: BsProblem, bandwidths_hz) -> np.ndarray:
    bw = np.asarray(bandwidths_hz, dtype=float)
    with np.errstate(divide="ignore"):
        return problem.comp_latency_s + problem.model_size_bits / (bw * problem.spectral_eff)


def even_split_latency(problem: BsProblem) -> float:
    """Max finish time when the BS bandwidth is split evenly."""
    if len(problem) == 0:
        raise ValueError("even split needs at least one user")
    share = problem.bs_bandwidth_hz / len(problem)
    return float(np.max(problem.comp_latency_s + problem.model_size_bits / (share * problem.spectral_eff)))
