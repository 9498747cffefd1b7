"""Discrete-time simulation of a network under an ON/OFF controller.

A controller is any callable ``controller(net, period_index, t_minutes)``
returning an :class:`ActionVector` or a boolean sequence with one entry per
cell. Actions are held fixed for a whole control period.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .network import Network
from .reward import DEFAULT_PENALTY, RewardBreakdown, RewardParams, step_reward
from .traffic import DemandModel, pixel_demands


class ConstraintViolation(ValueError):
    """An action would switch off a coverage-layer cell, or is malformed."""


class HorizonExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ActionVector:
    on: np.ndarray

    @classmethod
    def build(cls, net: Network, on) -> "ActionVector":
        if isinstance(on, ActionVector):
            on = on.on
        arr = np.array(on, dtype=bool).ravel()
        if arr.shape != (net.n_cells,):
            raise ConstraintViolation(
                f"action has {arr.size} entries, network has {net.n_cells} cells")
        off_cov = np.flatnonzero(net.coverage_mask & ~arr)
        if off_cov.size:
            raise ConstraintViolation(
                f"coverage-layer cells {off_cov.tolist()} switched OFF")
        arr.setflags(write=False)
        return cls(arr)

    @classmethod
    def all_on(cls, net: Network) -> "ActionVector":
        return cls.build(net, np.ones(net.n_cells, dtype=bool))

    @classmethod
    def capacity_off(cls, net: Network) -> "ActionVector":
        return cls.build(net, net.coverage_mask)

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.on)

    def __len__(self):
        return self.on.size

    def __eq__(self, other):
        if not isinstance(other, ActionVector):
            return NotImplemented
        return np.array_equal(self.on, other.on)

    __hash__ = None


Controller = Callable[[Network, int, int], "ActionVector | Sequence[bool]"]


@dataclass
class SimState:
    net: Network
    model: DemandModel
    rng: np.random.Generator
    step_minutes: int = 60
    t_minutes: int = 0
    end_minutes: int | None = None
    penalty_per_pixel: float = DEFAULT_PENALTY
    accum: RewardBreakdown = field(default_factory=RewardBreakdown)

    def __post_init__(self):
        if self.end_minutes is None:
            self.end_minutes = self.model.trace.horizon_minutes
        if self.end_minutes > self.model.trace.horizon_minutes:
            raise HorizonExceeded("simulation horizon runs past the end of the trace")
        if self.t_minutes % self.step_minutes:
            raise ValueError("t_minutes must be a multiple of step_minutes")
        self.params = RewardParams(self.penalty_per_pixel, self.step_minutes / 60.0)

    @classmethod
    def start(cls, net, model, seed, **kw) -> "SimState":
        return cls(net, model, np.random.default_rng(seed), **kw)


def do_sim_step(state: SimState, action) -> tuple[float, float]:
    """Advance one step under ``action``; return the (energy, penalty) delta."""
    if state.t_minutes + state.step_minutes > state.end_minutes:
        raise HorizonExceeded(f"no step left at t={state.t_minutes} min")
    net = state.net
    action = ActionVector.build(net, action)
    trace = state.model.trace
    idx = trace.step_at(state.t_minutes)
    demands = pixel_demands(state.model, net, idx, state.rng)
    carried = trace.samples[:, idx] * state.params.step_hours
    energy, penalty = step_reward(net, action, demands, carried, state.params)
    state.accum.add(state.t_minutes // state.step_minutes, energy, penalty)
    state.t_minutes += state.step_minutes
    return energy, penalty


class PeriodRecord(NamedTuple):
    period_index: int
    t_minutes: int
    actions: str
    energy: float
    penalty: float


class RunResult(NamedTuple):
    breakdown: RewardBreakdown
    schedule: list[PeriodRecord]


def run(net: Network, model: DemandModel, controller: Controller,
        horizon_minutes: int = 1440, control_period_minutes: int = 60,
        step_minutes: int = 60, seed=0, penalty_per_pixel: float = DEFAULT_PENALTY,
        start_minutes: int = 0, keep_steps: bool = False) -> RunResult:
    if control_period_minutes % step_minutes:
        raise ValueError("control period must be a multiple of step_minutes")
    if horizon_minutes % control_period_minutes:
        raise ValueError("horizon must be a multiple of the control period")
    state = SimState.start(net, model, seed, step_minutes=step_minutes,
                           t_minutes=start_minutes,
                           end_minutes=start_minutes + horizon_minutes,
                           penalty_per_pixel=penalty_per_pixel)
    if keep_steps:
        state.accum.per_step = []
    steps_per_period = control_period_minutes // step_minutes
    schedule = []
    for period in range(horizon_minutes // control_period_minutes):
        t0 = state.t_minutes
        action = ActionVector.build(net, controller(net, period, t0))
        e_sum = p_sum = 0.0
        for _ in range(steps_per_period):
            e, p = do_sim_step(state, action)
            e_sum += e
            p_sum += p
        schedule.append(PeriodRecord(period, t0, action.bitstring(), e_sum, p_sum))
    return RunResult(state.accum, schedule)


@dataclass
class Evaluation:
    mean: RewardBreakdown
    std: RewardBreakdown
    runs: list[RunResult]


def evaluate_controller(net: Network, model: DemandModel, controller: Controller,
                        horizon_minutes: int = 1440, control_period_minutes: int = 60,
                        step_minutes: int = 60, replications: int = 1,
                        seeds: Sequence[int] | None = None, **kw) -> Evaluation:
    """Replicate :func:`run` over seeds; report mean and sample std per component."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if seeds is None:
        seeds = range(replications)
    seeds = list(seeds)[:replications]
    if len(seeds) < replications:
        raise ValueError("fewer seeds than replications")
    runs = [run(net, model, controller, horizon_minutes, control_period_minutes,
                step_minutes, seed=s, **kw) for s in seeds]
    energy = np.array([r.breakdown.energy for r in runs])
    penalty = np.array([r.breakdown.penalty for r in runs])
    ddof = 1 if len(runs) > 1 else 0
    mean = RewardBreakdown(float(energy.mean()), float(penalty.mean()))
    std = RewardBreakdown(float(energy.std(ddof=ddof)), float(penalty.std(ddof=ddof)))
    return Evaluation(mean, std, runs)


def fixed_schedule_controller(actions: Sequence) -> Controller:
    """Replay a precomputed per-period action list."""
    actions = list(actions)

    def controller(net, period, t_minutes):
        return actions[period]
    return controller


SCHEDULE_FIELDS = PeriodRecord._fields


def write_schedule_log(schedule: Iterable[PeriodRecord], fh=None) -> str | None:
    """Write schedule rows as CSV to ``fh``, or return them as a string."""
    out = io.StringIO() if fh is None else fh
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SCHEDULE_FIELDS)
    for rec in schedule:
        writer.writerow([rec.period_index, rec.t_minutes, rec.actions,
                         repr(float(rec.energy)), repr(float(rec.penalty))])
    return out.getvalue() if fh is None else None


def read_schedule_log(text: str) -> list[PeriodRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [PeriodRecord(int(r["period_index"]), int(r["t_minutes"]), r["actions"],
                         float(r["energy"]), float(r["penalty"])) for r in rows]
