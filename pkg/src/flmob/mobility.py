"""Random Direction mobility with specular reflection at the area boundary."""

from __future__ import annotations

import dataclasses

import numpy as np

from .core import SimConfig, UserState

TWO_PI = 2.0 * np.pi


def fold(u, side):
    """Fold unbounded coordinates into [0, side] by mirror reflection.

    Returns ``(folded, flipped)`` where ``flipped`` is True where an odd number
    of reflections happened, i.e. the velocity component changed sign.
    Equivalent to reflecting repeatedly at each wall, so the travelled path
    length is preserved however many walls are hit.
    """
    u = np.asarray(u, dtype=float)
    period = 2.0 * side
    m = np.mod(u, period)
    flipped = m > side
    folded = np.where(flipped, period - m, m)
    # np.mod can return `period` itself for tiny negative inputs
    folded = np.clip(folded, 0.0, side)
    return folded, flipped


def step_positions(positions, distance, area_side, headings):
    """Move every row of ``positions`` by ``distance`` along ``headings``.

    Returns new positions and post-reflection headings. ``distance`` may be a
    scalar or per-user array.
    """
    positions = np.asarray(positions, dtype=float)
    headings = np.asarray(headings, dtype=float)
    cos, sin = np.cos(headings), np.sin(headings)
    x, flip_x = fold(positions[..., 0] + distance * cos, area_side)
    y, flip_y = fold(positions[..., 1] + distance * sin, area_side)
    cos = np.where(flip_x, -cos, cos)
    sin = np.where(flip_y, -sin, sin)
    new_headings = np.mod(np.arctan2(sin, cos), TWO_PI)
    return np.stack([x, y], axis=-1), new_headings


def draw_headings(stream: np.random.Generator, n: int) -> np.ndarray:
    return stream.uniform(0.0, TWO_PI, size=n)


def step(user: UserState, dt: float, area_side: float, stream: np.random.Generator,
         speed: float | None = None, heading: float | None = None) -> UserState:
    """Advance one user by one round.

    A fresh heading is drawn from ``stream`` (one uniform variate) unless
    ``heading`` forces it. ``speed`` defaults to ``user.speed``.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    drawn = float(draw_headings(stream, 1)[0])
    heading = drawn if heading is None else float(heading)
    speed = user.speed if speed is None else speed
    pos, new_heading = step_positions(np.asarray(user.position, dtype=float), speed * dt, area_side, heading)
    return dataclasses.replace(user, position=(float(pos[0]), float(pos[1])), heading=float(new_heading))


def round_dt(config: SimConfig, previous_round_latency: float | None = None) -> float:
    if config.mobility_dt_mode == "fixed-period" or previous_round_latency is None:
        return config.mobility_period_s
    return float(previous_round_latency)


def initial_positions(stream: np.random.Generator, n: int, area_side: float) -> np.ndarray:
    return stream.uniform(0.0, area_side, size=(n, 2))
