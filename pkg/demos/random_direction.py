"""
Random Direction mobility
=========================

Each round a user picks a fresh heading and travels speed * period metres,
bouncing off the walls. Over time the users cover the square evenly.
"""

import numpy as np

from flmob.core import derive_stream
from flmob.mobility import draw_headings, initial_positions, step_positions

side = 1000.0
pos = initial_positions(derive_stream(0, "placement", 0, 2), 50, side)

# A step longer than the square folds back several times without losing length.
p, h = step_positions(np.array([[990.0, 500.0]]), 2500.0, side, np.array([0.0]))
print("2.5 km east from x=990:", p[0], "heading", round(float(h[0]), 3))

# Occupancy of a 4x4 grid after a long walk at 20 m per round.
counts = np.zeros((4, 4))
for n in range(1, 5001):
    pos, _ = step_positions(pos, 20.0, side, draw_headings(derive_stream(0, "mobility", n), 50))
    if n % 250 == 0:
        c, _, _ = np.histogram2d(pos[:, 0], pos[:, 1], bins=4, range=[[0, side], [0, side]])
        counts += c
print("\ncell occupancy share (uniform = 0.0625):")
print(np.round(counts / counts.sum(), 3))
