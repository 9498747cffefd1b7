"""
Partitioned synthesis and the brute-force oracle
================================================

Split a network into subgames of at most eight cells, run the distributed
controller, then check a short schedule against exhaustive enumeration on a
tiny instance.
"""

import numpy as np

from cellsleep import (DemandModel, DemandTrace, brute_force_optimal, load_network,
                       partition_network, synthesize_short)
from cellsleep.harness import format_table, run_experiment
from cellsleep.network import Cell, FrequencyLayer, Network, Pixel
from cellsleep.scenario import diurnal_model, generate_scenario
from cellsleep.synthesis import SynthesisConfig

# whole stations are grouped by the centre of their coverage
net = load_network(generate_scenario(8, 3, 30, 30, seed=3))
for part in partition_network(net, max_cells=8):
    print(f"partition {part.id}: cells {list(part.cell_ids)}, "
          f"{len(part.owned_pixel_ids)} pixels owned")

# each subgame assumes its neighbours stay ON; the simulator reports the truth
model = diurnal_model(net, trough_fraction=0.1)
rows = run_experiment(net, model, ["rh", "rh-distributed"], horizon_minutes=1440,
                      scenario_name="eight-stations")
print(format_table(rows))

# three capacity cells over three hours: 512 candidate schedules
E, T = FrequencyLayer.E, FrequencyLayer.T
cells = [Cell(0, 0, E, 80.0, 0.01, {0: 3.0, 1: 3.0, 2: 3.0}),
         Cell(1, 0, T, 60.0, 0.01, {0: 6.0, 1: 6.0}),
         Cell(2, 0, T, 50.0, 0.01, {1: 6.0, 2: 6.0}),
         Cell(3, 0, T, 40.0, 0.01, {2: 6.0})]
tiny = Network.from_parts(cells, [Pixel(i, i, 0) for i in range(3)])
rng = np.random.default_rng(1)
tiny_model = DemandModel(DemandTrace(60, rng.uniform(0, 12, size=(4, 3))))

exact, best = brute_force_optimal(tiny, tiny_model, 0, 180)
for optimizer in ("exhaustive", "hill_climb", "cross_entropy"):
    s = synthesize_short(tiny, tiny_model, 0, SynthesisConfig(optimizer=optimizer))
    print(f"{optimizer:>13}: {s.bitstrings()} reward {s.estimated_reward:.2f} "
          f"after {s.candidates_evaluated} candidates")
print(f"{'oracle':>13}: {exact.bitstrings()} reward {best:.2f}")
