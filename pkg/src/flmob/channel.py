"""Path loss, Rayleigh block fading, SNR, uplink rate and upload latency."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChannelSnapshot, SimConfig

MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    bandwidth_mhz: float

    def __post_init__(self):
        if not self.bandwidth_mhz > 0:
            raise ValueError("BS bandwidth must be positive")


def path_loss_db(distance_m):
    """128.1 + 37.6 log10(D) with D in kilometres; distances below 1 m are clamped."""
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    pl = 128.1 + 37.6 * np.log10(d / 1000.0)
    return float(pl) if np.ndim(pl) == 0 else pl


def path_gain(distance_m):
    """Linear large-scale gain 10^(-PL/10)."""
    return 10.0 ** (-np.asarray(path_loss_db(distance_m)) / 10.0)


def draw_gain(distance_m, stream: np.random.Generator, fading=None):
    """Rayleigh-faded power gain: path gain times an Exp(1) fading power.

    ``fading`` overrides the exponential draw (used to pin examples).
    """
    pg = path_gain(distance_m)
    if fading is None:
        fading = stream.exponential(1.0, size=np.shape(pg))
    g = pg * fading
    return float(g) if np.ndim(g) == 0 else g


def snr(gain, config: SimConfig):
    """p_max |h|^2 / N0 with both powers as per-MHz densities."""
    return gain * (config.tx_psd_mw / config.noise_psd_mw)


def spectral_efficiency(gain, config: SimConfig):
    return np.log2(1.0 + snr(gain, config))


def uplink_rate(bandwidth_mhz, snr_value):
    """Shannon rate in bit/s for bandwidth in MHz."""
    if np.any(np.asarray(bandwidth_mhz) < 0) or np.any(np.asarray(snr_value) < 0):
        raise ValueError("bandwidth and SNR must be non-negative")
    return bandwidth_mhz * 1e6 * np.log2(1.0 + snr_value)


def upload_latency(model_size_bits: float, rate: float) -> float:
    """S / rate; a zero rate gives ``math.inf`` rather than a finite number."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0:
        return math.inf
    return model_size_bits / rate


def distances(user_positions, bs_positions) -> np.ndarray:
    u = np.asarray(user_positions, dtype=float).reshape(-1, 2)
    b = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    d = np.hypot(u[:, None, 0] - b[None, :, 0], u[:, None, 1] - b[None, :, 1])
    return np.maximum(d, MIN_DISTANCE_M)


def snapshot(user_positions, bss, stream: np.random.Generator) -> ChannelSnapshot:
    """Distances and independently faded gains for every (user, BS) pair.

    ``user_positions`` is an (N, 2) array or a sequence of ``UserState``;
    ``bss`` a sequence of ``BaseStation`` or an (M, 2) array. Fading is drawn
    in row-major (user, BS) order.
    """
    if len(user_positions) and hasattr(user_positions[0], "position"):
        user_positions = [u.position for u in user_positions]
    if len(bss) and hasattr(bss[0], "position"):
        bss = [b.position for b in bss]
    d = distances(user_positions, bss)
    fading = stream.exponential(1.0, size=d.shape)
    return ChannelSnapshot(gains=path_gain(d) * fading, distances=d)


def place_base_stations(config: SimConfig, stream: np.random.Generator) -> list[BaseStation]:
    """Jittered grid: ceil(sqrt(M)) rows, BSs spread evenly across rows, each
    jittered uniformly within the middle half of its cell."""
    m, side = config.num_bs, config.area_side_m
    rows = math.ceil(math.sqrt(m))
    per_row = [m // rows + (1 if r < m % rows else 0) for r in range(rows)]
    per_row = [c for c in per_row if c > 0]
    rows = len(per_row)
    bw = config.resolved_bs_bandwidth_mhz()
    out = []
    cell_h = side / rows
    for r, count in enumerate(per_row):
        cell_w = side / count
        for c in range(count):
            jx, jy = stream.uniform(-0.25, 0.25, size=2)
            x = (c + 0.5 + jx) * cell_w
            y = (r + 0.5 + jy) * cell_h
            k = len(out)
            out.append(BaseStation(id=k, position=(x, y), bandwidth_mhz=float(bw[k])))
    return out
