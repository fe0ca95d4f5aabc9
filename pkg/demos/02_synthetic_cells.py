"""
Synthetic cells and relaxation features
=======================================

Each simulated cell fades over its cycle life. After every charge the
voltage relaxes back towards open circuit, and the variance, skewness and
maximum of that trace are the model inputs.
"""

import numpy as np

from swarmcap.data import CY45_05, POOL_COMPOSITION, extract_features, generate_cell, generate_dataset

cell = generate_cell(CY45_05, cell_seed=3, n_cycles=400)
print("capacity at cycles 1, 200, 400:", cell.capacity[[0, 199, 399]].round(4), "Ah")
print("features at cycle 1  ", cell.features[0])
print("features at cycle 400", cell.features[-1])

# the features are plain moments of a voltage trace
t = np.linspace(0, 1800, 120)
v = 4.15 + 0.01 * np.exp(-t / 10) + 0.015 * np.exp(-t / 100)
print(extract_features(v))

pool = generate_dataset(seed=0)
print(len(pool), "points from", len(set(pool.cell_id)), "cells")
for cond, n_cells, n_points in POOL_COMPOSITION:
    print(f"  {cond.tag:<12} {n_cells:>3} cells {n_points:>6} points")

# capacity tracks the features closely within a cell
r = np.corrcoef(cell.features[:, 2], cell.capacity)[0, 1]
print("corr(max voltage, capacity) =", round(r, 3))
