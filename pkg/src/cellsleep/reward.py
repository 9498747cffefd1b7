"""Coverage penalty plus energy cost, accumulated as a left Riemann sum."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Cell, Network

DEFAULT_PENALTY = 1000.0


@dataclass(frozen=True)
class RewardParams:
    penalty_per_pixel: float = DEFAULT_PENALTY
    step_hours: float = 1.0

    def __post_init__(self):
        if not self.penalty_per_pixel > 0:
            raise ValueError("penalty_per_pixel must be > 0")
        if not self.step_hours > 0:
            raise ValueError("step_hours must be > 0")


@dataclass
class RewardBreakdown:
    energy: float = 0.0
    penalty: float = 0.0
    per_step: list[tuple[int, float, float]] | None = field(default=None, repr=False)

    @property
    def reward(self) -> float:
        return self.energy + self.penalty

    def add(self, step: int, energy: float, penalty: float) -> None:
        self.energy += energy
        self.penalty += penalty
        if self.per_step is not None:
            self.per_step.append((step, energy, penalty))

    def as_dict(self) -> dict:
        return {"energy": self.energy, "penalty": self.penalty, "reward": self.reward}


def pixel_penalty(contribution: float, demand: float, params: RewardParams = RewardParams()) -> float:
    # equality is penalised: coverage needs a strictly positive margin
    if contribution - demand > 0:
        return 0.0
    return params.penalty_per_pixel


def cell_energy(cell: Cell, on: bool, carried_mb: float, step_hours: float) -> float:
    if not on:
        return 0.0
    return cell.base_power * step_hours + cell.cost_per_mb * carried_mb


def step_reward(net: Network, action, pixel_demands, carried, params: RewardParams) -> tuple[float, float]:
    """Energy and penalty of one simulation step.

    ``carried`` is megabits per cell over the step; OFF cells carry nothing
    regardless of what is passed. The penalty is weighted by
    ``params.step_hours`` so that both terms integrate over the same step.
    """
    on = np.asarray(getattr(action, "on", action), dtype=bool)
    demands = np.asarray(pixel_demands, dtype=float)
    carried = np.asarray(carried, dtype=float)
    if on.shape != (net.n_cells,) or carried.shape != (net.n_cells,):
        raise ValueError(f"expected {net.n_cells} cell entries")
    if demands.shape != (net.n_pixels,):
        raise ValueError(f"expected {net.n_pixels} pixel demands")

    h = params.step_hours
    per_cell = np.where(on, net.base_power * h + net.cost_per_mb * carried, 0.0)
    energy = float(per_cell.sum())

    contrib = net.contributions_under(on)
    short = np.count_nonzero(~(contrib - demands > 0))
    penalty = short * params.penalty_per_pixel * h
    return energy, float(penalty)
