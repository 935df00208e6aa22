"""Federated learning over a mobile multi-BS wireless network: latency model,
optimal per-BS bandwidth split, delay-aware greedy scheduling and baselines."""

from .bandwidth import BsProblem, even_split_latency, optimal_allocation, optimal_time
from .core import (ChannelSnapshot, ConfigError, RoundRecord, Schedule, SimConfig, UserState,
                   dbm_to_linear_mw, derive_stream, linear_mw_to_dbm, load_config)
from .scheduler import (POLICIES, FairnessLedger, PolicyInput, dagsa, fedcs, necessary_set,
                        randomly_select, select_all, uniform_bandwidth, update_ledger)
from .sim import ExperimentSpec, oracle_solve, run_experiment, run_round, simulate

__version__ = "0.1.0"
