"""Experiment driver: run controllers on a scenario and tabulate results."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .baselines import NightScheduleConfig, allon_controller, night_schedule_controller
from .network import Network, ScenarioError
from .partition import DEFAULT_MAX_CELLS, PartitionError, distributed_controller, partition_network
from .reward import DEFAULT_PENALTY
from .simulator import ConstraintViolation, HorizonExceeded, PeriodRecord, run, write_schedule_log
from .synthesis import SynthesisConfig, receding_horizon_controller
from .traffic import DemandModel

CONTROLLERS = ("allon", "night", "rh", "rh-distributed")
WORKERS_ENV = "CELLSLEEP_WORKERS"

RESULT_FIELDS = ("scenario", "controller", "seed", "status", "energy", "penalty",
                 "reward", "savings_vs_allon")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentResult:
    scenario_name: str
    controller_name: str
    seed: int
    energy: float
    penalty: float
    reward: float
    savings_vs_allon: float = math.nan
    wall_time_seconds: float = 0.0
    schedule_log: str | None = None
    status: str = "ok"
    schedule: list[PeriodRecord] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def build_controller(name: str, net: Network, model: DemandModel, cfg: SynthesisConfig,
                     night: NightScheduleConfig = NightScheduleConfig(),
                     max_cells: int = DEFAULT_MAX_CELLS, workers: int = 1):
    if name == "allon":
        return allon_controller()
    if name == "night":
        return night_schedule_controller(night)
    if name == "rh":
        return receding_horizon_controller(net, model, cfg)
    if name == "rh-distributed":
        return distributed_controller(net, model, partition_network(net, max_cells), cfg, workers)
    raise ValueError(f"unknown controller {name!r}; choose from {CONTROLLERS}")


@dataclass(frozen=True)
class _Job:
    scenario_name: str
    controller: str
    seed: int
    horizon: int
    period: int
    step: int
    penalty: float
    cfg: SynthesisConfig
    night: NightScheduleConfig
    max_cells: int


def _run_job(job: _Job, net: Network, model: DemandModel) -> ExperimentResult:
    # synthesis is seeded from the run seed so (seed, scenario, controller)
    # fixes every number
    cfg = replace(job.cfg, seed=job.seed, control_period_minutes=job.period,
                  step_minutes=job.step, penalty_per_pixel=job.penalty)
    start = time.perf_counter()
    try:
        ctrl = build_controller(job.controller, net, model, cfg, job.night, job.max_cells)
        res = run(net, model, ctrl, job.horizon, job.period, job.step, seed=job.seed,
                  penalty_per_pixel=job.penalty)
    except (ConstraintViolation, PartitionError, HorizonExceeded, ValueError) as exc:
        nan = math.nan
        return ExperimentResult(job.scenario_name, job.controller, job.seed, nan, nan, nan,
                                wall_time_seconds=time.perf_counter() - start,
                                status=f"failed: {exc}")
    b = res.breakdown
    return ExperimentResult(job.scenario_name, job.controller, job.seed, b.energy, b.penalty,
                            b.reward, wall_time_seconds=time.perf_counter() - start,
                            schedule=res.schedule)


def run_experiment(net: Network, model: DemandModel, controllers, horizon_minutes: int = 1440,
                   seeds=(0,), output_dir=None, scenario_name: str = "scenario",
                   cfg: SynthesisConfig = SynthesisConfig(),
                   night: NightScheduleConfig = NightScheduleConfig(),
                   max_cells: int = DEFAULT_MAX_CELLS, period_minutes: int = 60,
                   step_minutes: int = 60, penalty_per_pixel: float = DEFAULT_PENALTY,
                   workers: int | None = None) -> list[ExperimentResult]:
    """One row per (controller, seed); ALLON always runs as the savings baseline."""
    controllers = list(dict.fromkeys(controllers))
    if not controllers:
        raise ValueError("need at least one controller")
    for name in controllers:
        if name not in CONTROLLERS:
            raise ValueError(f"unknown controller {name!r}; choose from {CONTROLLERS}")
    if horizon_minutes > model.trace.horizon_minutes:
        raise ScenarioError("horizon is longer than the demand trace")
    if model.trace.samples.shape[0] != net.n_cells:
        raise ScenarioError("trace does not match the scenario's cells")
    names = ["allon"] + [c for c in controllers if c != "allon"]
    jobs = [_Job(scenario_name, name, int(seed), horizon_minutes, period_minutes, step_minutes,
                 penalty_per_pixel, cfg, night, max_cells)
            for seed in seeds for name in names]

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_job, jobs, [net] * len(jobs), [model] * len(jobs)))
    else:
        results = [_run_job(job, net, model) for job in jobs]

    baseline = {r.seed: r for r in results if r.controller_name == "allon"}
    for r in results:
        base = baseline.get(r.seed)
        if r.ok and base is not None and base.ok and base.energy > 0:
            r.savings_vs_allon = 1.0 - r.energy / base.energy

    if output_dir is not None:
        write_outputs(results, output_dir)
    return results


def write_outputs(results, output_dir) -> None:
    out = Path(output_dir)
    (out / "schedules").mkdir(parents=True, exist_ok=True)
    for r in results:
        if r.ok:
            path = out / "schedules" / f"{r.scenario_name}_{r.controller_name}_seed{r.seed}.csv"
            path.write_text(write_schedule_log(r.schedule))
            r.schedule_log = str(path.relative_to(out))
    (out / "results.csv").write_text(results_csv(results))
    (out / "results.txt").write_text(format_table(results))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "controller", "seed", "wall_time_seconds"])
    for r in results:
        w.writerow([r.scenario_name, r.controller_name, r.seed, f"{r.wall_time_seconds:.3f}"])
    (out / "timings.csv").write_text(buf.getvalue())


def _row(r: ExperimentResult) -> list:
    return [r.scenario_name, r.controller_name, r.seed, r.status, repr(r.energy),
            repr(r.penalty), repr(r.reward), repr(r.savings_vs_allon)]


def results_csv(results) -> str:
    """Comma-separated rows with full float precision (no wall times)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS + ("schedule_log",))
    for r in results:
        w.writerow(_row(r) + [r.schedule_log or ""])
    return buf.getvalue()


def format_table(results) -> str:
    """Aligned human-readable comparison, one line per run."""
    head = ["Scenario", "Controller", "Seed", "Energy", "Penalty", "Reward", "Savings"]
    rows = []
    for r in results:
        if r.ok:
            sav = "" if math.isnan(r.savings_vs_allon) else f"{100 * r.savings_vs_allon:.1f}%"
            rows.append([r.scenario_name, r.controller_name, str(r.seed), f"{r.energy:.1f}",
                         f"{r.penalty:.1f}", f"{r.reward:.1f}", sav])
        else:
            rows.append([r.scenario_name, r.controller_name, str(r.seed), r.status, "", "", ""])
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    lines = ["  ".join(x.ljust(w) if i < 3 else x.rjust(w)
                       for i, (x, w) in enumerate(zip(line, widths)))
             for line in [head] + rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
