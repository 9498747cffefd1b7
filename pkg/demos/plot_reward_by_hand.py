"""
Scoring an action by hand
=========================

Two cells, two pixels. The 800 MHz cell must stay ON; the 1800 MHz cell
adds capacity on pixel 1. We score every action vector for one hour.
"""

import itertools

from cellsleep import FrequencyLayer, RewardParams, step_reward
from cellsleep.network import Cell, Network, Pixel

# cell 0 covers both pixels, cell 1 only pixel 1
cells = [Cell(0, 0, FrequencyLayer.E, 100.0, 0.5, {0: 4.0, 1: 2.0}),
         Cell(1, 0, FrequencyLayer.T, 200.0, 0.25, {1: 9.0})]
net = Network.from_parts(cells, [Pixel(0, 0, 0), Pixel(1, 1, 0)])

# per-cell demand of 6 Mb/h is spread evenly over the pixels each cell covers
cell_demand = [6.0, 6.0]
pixel_demand = [6.0 / 2, 6.0 / 2 + 6.0]
print("pixel demand:", pixel_demand)

# a pixel is served only when contribution strictly exceeds demand
for on in itertools.product([False, True], repeat=2):
    energy, penalty = step_reward(net, list(on), pixel_demand, cell_demand, RewardParams())
    print(f"action {''.join('01'[b] for b in on)}: energy {energy:6.1f}  penalty {penalty:6.1f}")

# action 01 is not a legal schedule (the coverage cell is OFF); the simulator
# rejects it, the reward function alone does not care
