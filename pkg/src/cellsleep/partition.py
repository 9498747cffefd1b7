"""Geographic partitioning into small subgames and the merged controller."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .network import Network
from .simulator import ActionVector
from .synthesis import RecedingHorizonController, Strategy, SynthesisConfig
from .traffic import DemandModel

DEFAULT_MAX_CELLS = 8


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    id: int
    cell_ids: tuple[int, ...]
    owned_pixel_ids: tuple[int, ...]


def station_centroids(net: Network) -> dict[int, np.ndarray]:
    """Contribution-weighted mean grid position of each station's coverage."""
    C = net.contribution_matrix
    out = {}
    for sid, cells in net.stations().items():
        w = np.asarray(C[cells].sum(axis=0)).ravel()
        if w.sum() > 0:
            out[sid] = w @ net.pixel_xy / w.sum()
        else:
            out[sid] = net.pixel_xy.mean(axis=0)
    return out


def partition_network(net: Network, max_cells: int = DEFAULT_MAX_CELLS) -> list[Partition]:
    """Group whole stations into clusters of at most ``max_cells`` cells.

    Clusters start as single stations; the closest pair (by cell-weighted
    centroid distance) that still fits is merged until no pair fits.
    """
    if max_cells < 1:
        raise PartitionError("max_cells must be >= 1")
    stations = net.stations()
    for sid, cells in stations.items():
        if len(cells) > max_cells:
            raise PartitionError(
                f"station {sid} has {len(cells)} cells, more than max_cells={max_cells}; "
                "raise max_cells")
    centroids = station_centroids(net)
    clusters = [([sid], list(cells), centroids[sid]) for sid, cells in stations.items()]

    while True:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if len(clusters[i][1]) + len(clusters[j][1]) > max_cells:
                    continue
                d = float(np.hypot(*(clusters[i][2] - clusters[j][2])))
                cand = (d, min(clusters[i][0]), min(clusters[j][0]), i, j)
                if best is None or cand < best:
                    best = cand
        if best is None:
            break
        i, j = best[3], best[4]
        si, ci, xi = clusters[i]
        sj, cj, xj = clusters[j]
        merged = (si + sj, ci + cj, (xi * len(ci) + xj * len(cj)) / (len(ci) + len(cj)))
        clusters = [c for k, c in enumerate(clusters) if k not in (i, j)] + [merged]

    groups = sorted((sorted(c[1]) for c in clusters), key=lambda cells: cells[0])
    # pixel owner: the group contributing most under all-ON, ties to lowest id
    C = net.contribution_matrix
    weight = np.vstack([np.asarray(C[g].sum(axis=0)).ravel() for g in groups])
    owner = np.argmax(weight, axis=0)
    return [Partition(pid, tuple(g), tuple(np.flatnonzero(owner == pid).tolist()))
            for pid, g in enumerate(groups)]


def validate_partitions(net: Network, partitions, max_cells: int = DEFAULT_MAX_CELLS) -> None:
    cells = sorted(c for p in partitions for c in p.cell_ids)
    pixels = sorted(x for p in partitions for x in p.owned_pixel_ids)
    if cells != list(range(net.n_cells)):
        raise PartitionError("every cell must belong to exactly one partition")
    if pixels != list(range(net.n_pixels)):
        raise PartitionError("every pixel must be owned by exactly one partition")
    for p in partitions:
        if len(p.cell_ids) > max_cells:
            raise PartitionError(f"partition {p.id} has {len(p.cell_ids)} > {max_cells} cells")


class DistributedController:
    """Per-partition receding-horizon synthesis merged into one action.

    Each subgame decides its own capacity cells, counts only its owned pixels
    and its own cells' energy, and assumes every other cell is ON. The
    estimates in ``estimates`` are therefore optimistic at partition
    boundaries; realised penalties come from the simulator.
    """

    def __init__(self, net: Network, model: DemandModel, partitions,
                 cfg: SynthesisConfig = SynthesisConfig(), workers: int = 1):
        validate_partitions(net, partitions, max(len(p.cell_ids) for p in partitions))
        self.net = net
        self.partitions = list(partitions)
        self.planner = RecedingHorizonController(net, model, cfg)
        self.workers = workers
        self.estimates: list[list[Strategy]] = []

    def _plan(self, part: Partition, t_minutes: int) -> Strategy:
        decision = [c for c in part.cell_ids if not self.net.coverage_mask[c]]
        return self.planner.plan(t_minutes, decision_cells=decision,
                                 pixels=list(part.owned_pixel_ids),
                                 energy_cells=list(part.cell_ids))

    def __call__(self, net, period, t_minutes):
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                plans = list(pool.map(lambda p: self._plan(p, t_minutes), self.partitions))
        else:
            plans = [self._plan(p, t_minutes) for p in self.partitions]
        on = np.ones(self.net.n_cells, dtype=bool)
        for part, plan in zip(self.partitions, plans):
            cells = list(part.cell_ids)
            on[cells] = plan.actions[0].on[cells]
        self.estimates.append(plans)
        return ActionVector.build(self.net, on)


def distributed_controller(net: Network, model: DemandModel, partitions,
                           cfg: SynthesisConfig = SynthesisConfig(), workers: int = 1) -> DistributedController:
    return DistributedController(net, model, partitions, cfg, workers)


def partition_rows(partitions) -> tuple[str, str]:
    """CSV text for (partition_id, cell_id) and (partition_id, pixel_id) rows."""
    cells, pixels = io.StringIO(), io.StringIO()
    cw = csv.writer(cells, lineterminator="\n")
    pw = csv.writer(pixels, lineterminator="\n")
    cw.writerow(["partition_id", "cell_id"])
    pw.writerow(["partition_id", "pixel_id"])
    for p in partitions:
        cw.writerows([p.id, c] for c in p.cell_ids)
        pw.writerows([p.id, x] for x in p.owned_pixel_ids)
    return cells.getvalue(), pixels.getvalue()
