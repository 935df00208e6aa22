"""Shared domain types, configuration and seeded random streams.

Every random draw in the simulator goes through :func:`derive_stream`, keyed by
``(master_seed, purpose, round)``. Two runs with equal configuration therefore
produce identical results, and any one module can be exercised in isolation
with the exact draws it would see inside a full simulation.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

PURPOSES = ("mobility", "fading", "compute", "selection", "datagen", "shuffle", "placement")

MOBILITY_DT_MODES = ("fixed-period", "realized-previous-round")
COMP_LATENCY_MODES = ("per-round", "fixed-per-user")

ENV_PREFIX = "FLMOB_"


class ConfigError(ValueError):
    """Raised for invalid configuration values or malformed config files."""


# --------------------------------------------------------------------------
# units

def dbm_to_linear_mw(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_mw_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p)


# --------------------------------------------------------------------------
# random streams

def derive_stream(master_seed: int, purpose: str, round: int = 0, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(master_seed, purpose, round, *keys)``.

    ``keys`` lets a caller split a purpose further (for instance one shuffle
    stream per user) without colliding with any other stream.
    """
    if purpose not in PURPOSES:
        raise ValueError(f"unknown stream purpose {purpose!r}; expected one of {PURPOSES}")
    if round < 0:
        raise ValueError("round index must be non-negative")
    seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    entropy = [seed & 0xFFFFFFFF, seed >> 32, PURPOSES.index(purpose), int(round), *map(int, keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class SimConfig:
    area_side_m: float = 1000.0
    num_users: int = 50
    num_bs: int = 8
    tx_psd_dbm_per_mhz: float = 14.0
    noise_psd_dbm_per_mhz: float = -114.0
    # None means "all 1.0 MHz"; see resolved_bs_bandwidth_mhz() for the heterogeneous draw.
    bs_bandwidth_mhz: tuple[float, ...] | None = None
    heterogeneous_bw: bool = False
    hetero_bw_range_mhz: tuple[float, float] = (0.5, 1.5)
    model_size_bits: float = 1.0e6
    comp_latency_range_s: tuple[float, float] = (0.10, 0.11)
    comp_latency_mode: str = "per-round"
    rho1: float = 0.1
    rho2: float = 0.3
    speed_mps: float = 20.0
    mobility_dt_mode: str = "fixed-period"
    mobility_period_s: float = 1.0
    local_epochs: int = 10
    learning_rate: float = 0.01
    batch_size: int = 32
    shards_per_user: int = 2
    num_features: int = 32
    train_size: int = 10_000
    test_size: int = 2_000
    class_separation: float = 3.0
    master_seed: int = 0

    def __post_init__(self):
        if self.bs_bandwidth_mhz is not None:
            object.__setattr__(self, "bs_bandwidth_mhz", tuple(float(b) for b in self.bs_bandwidth_mhz))
        object.__setattr__(self, "comp_latency_range_s", tuple(float(t) for t in self.comp_latency_range_s))
        object.__setattr__(self, "hetero_bw_range_mhz", tuple(float(t) for t in self.hetero_bw_range_mhz))
        self.validate()

    def validate(self) -> None:
        if not self.area_side_m > 0:
            raise ConfigError("area_side_m must be positive")
        if self.num_users < 1 or self.num_bs < 1:
            raise ConfigError("num_users and num_bs must be at least 1")
        if self.bs_bandwidth_mhz is not None:
            if len(self.bs_bandwidth_mhz) != self.num_bs:
                raise ConfigError(
                    f"bs_bandwidth_mhz has {len(self.bs_bandwidth_mhz)} entries, expected num_bs={self.num_bs}")
            if not all(b > 0 for b in self.bs_bandwidth_mhz):
                raise ConfigError("every BS bandwidth must be positive")
        lo, hi = self.hetero_bw_range_mhz
        if not 0 < lo <= hi:
            raise ConfigError("hetero_bw_range_mhz must satisfy 0 < low <= high")
        if not self.model_size_bits > 0:
            raise ConfigError("model_size_bits must be positive")
        t_min, t_max = self.comp_latency_range_s
        if not 0 <= t_min <= t_max:
            raise ConfigError("comp_latency_range_s must satisfy 0 <= t_min <= t_max")
        if not 0 <= self.rho1 <= 1:
            raise ConfigError("rho1 must lie in [0, 1]")
        if not 0 < self.rho2 <= 1:
            raise ConfigError("rho2 must lie in (0, 1]")
        if self.speed_mps < 0:
            raise ConfigError("speed_mps must be non-negative")
        if self.mobility_dt_mode not in MOBILITY_DT_MODES:
            raise ConfigError(f"mobility_dt_mode must be one of {MOBILITY_DT_MODES}")
        if self.comp_latency_mode not in COMP_LATENCY_MODES:
            raise ConfigError(f"comp_latency_mode must be one of {COMP_LATENCY_MODES}")
        if self.mobility_period_s < 0:
            raise ConfigError("mobility_period_s must be non-negative")
        if self.local_epochs < 0 or self.batch_size < 1 or self.shards_per_user < 1:
            raise ConfigError("local_epochs >= 0, batch_size >= 1 and shards_per_user >= 1 required")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.num_features < 1 or self.train_size < 10 or self.test_size < 10:
            raise ConfigError("need num_features >= 1 and at least 10 train and test samples")

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def tx_psd_mw(self) -> float:
        return dbm_to_linear_mw(self.tx_psd_dbm_per_mhz)

    @property
    def noise_psd_mw(self) -> float:
        return dbm_to_linear_mw(self.noise_psd_dbm_per_mhz)

    def resolved_bs_bandwidth_mhz(self) -> np.ndarray:
        """Per-BS bandwidth B_k in MHz.

        Explicit ``bs_bandwidth_mhz`` wins. In heterogeneous mode each B_k is
        drawn uniformly from ``hetero_bw_range_mhz`` on the placement stream and
        rescaled so the total stays ``num_bs`` MHz, the same as the
        homogeneous system.
        """
        if self.bs_bandwidth_mhz is not None:
            return np.asarray(self.bs_bandwidth_mhz, dtype=float)
        if not self.heterogeneous_bw:
            return np.ones(self.num_bs)
        rng = derive_stream(self.master_seed, "placement", 0, 1)
        bw = rng.uniform(*self.hetero_bw_range_mhz, size=self.num_bs)
        return bw * (self.num_bs / bw.sum())


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(SimConfig)}


def _parse_value(name: str, raw: str) -> Any:
    raw = raw.strip()
    default = _FIELD_TYPES[name].default
    try:
        if name in ("bs_bandwidth_mhz",):
            if raw.lower() in ("", "none"):
                return None
            return tuple(float(v) for v in raw.replace(";", ",").split(","))
        if name in ("comp_latency_range_s", "hetero_bw_range_mhz"):
            vals = tuple(float(v) for v in raw.strip("[]()").replace(";", ",").split(","))
            if len(vals) != 2:
                raise ValueError("expected two values")
            return vals
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")
        if isinstance(default, int):
            return int(float(raw)) if name != "master_seed" else int(raw, 0)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from None


def config_from_mapping(values: Mapping[str, Any], base: SimConfig | None = None) -> SimConfig:
    """Build a config from string or typed values, on top of ``base``."""
    changes = {}
    for key, value in values.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _parse_value(key, value) if isinstance(value, str) else value
    base = base or SimConfig()
    try:
        return dataclasses.replace(base, **changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in _FIELD_TYPES:
                out[name] = value
    return out


def load_config(path: str | os.PathLike | None = None,
                overrides: Mapping[str, Any] | None = None,
                environ: Mapping[str, str] | None = None) -> SimConfig:
    """Load a config file, then apply ``FLMOB_*`` environment variables, then
    explicit overrides (highest precedence)."""
    values: dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    values.update(env_overrides(environ))
    values.update(overrides or {})
    return config_from_mapping(values)


def format_config(config: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# domain types

@dataclass
class UserState:
    id: int
    position: tuple[float, float]
    heading: float = 0.0
    speed: float = 0.0
    comp_latency_s: float = 0.0
    participation_count: int = 0
    local_model: Any = None
    dataset_ref: Any = None


@dataclass(frozen=True)
class ChannelSnapshot:
    gains: np.ndarray        # (N, M) linear power gain |h|^2
    distances: np.ndarray    # (N, M) metres

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_bs(self) -> int:
        return self.gains.shape[1]


@dataclass
class Schedule:
    assignments: dict[int, tuple[int, ...]]
    bandwidths: dict[int, float] = field(default_factory=dict)       # MHz
    per_bs_latency: dict[int, float] = field(default_factory=dict)   # seconds
    round_latency: float = 0.0

    @property
    def selected(self) -> list[int]:
        return sorted(i for users in self.assignments.values() for i in users)

    @property
    def num_selected(self) -> int:
        return sum(len(users) for users in self.assignments.values())

    def bs_of(self) -> dict[int, int]:
        return {i: k for k, users in self.assignments.items() for i in users}


@dataclass
class RoundRecord:
    round_index: int
    schedule: Schedule
    accuracy: float
    cumulative_time_s: float
    participation_counts: np.ndarray
