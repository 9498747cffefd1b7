"""Command-line entry point: ``cellsleep {generate,run,oracle,partition}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .baselines import NightScheduleConfig
from .network import ScenarioError, dump_document, load_network
from .partition import DEFAULT_MAX_CELLS, PartitionError, partition_network, partition_rows
from .scenario import diurnal_model, generate_scenario
from .simulator import ConstraintViolation, HorizonExceeded
from .synthesis import OPTIMIZERS, SynthesisConfig, brute_force_optimal
from .traffic import DemandModel, load_trace, trace_to_document


def _trace_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("demand")
    g.add_argument("--trace", help="trace JSON; a diurnal trace is generated when omitted")
    g.add_argument("--days", type=int, default=1)
    g.add_argument("--peak", default="auto",
                   help="per-cell peak demand in Mb/h, or 'auto' (80%% of all-ON capacity)")
    g.add_argument("--trough", type=float, default=0.1, help="night trough as a fraction of peak")
    g.add_argument("--step-minutes", type=int, default=60)
    g.add_argument("--trace-seed", type=int, default=0)
    g.add_argument("--trace-noise", type=float, default=0.0)
    g.add_argument("--noise-kind", choices=("none", "multiplicative_uniform"), default="none")
    g.add_argument("--noise-halfwidth", type=float, default=0.0)


def _model(args, net) -> DemandModel:
    if args.trace:
        return DemandModel(load_trace(args.trace, net), args.noise_kind, args.noise_halfwidth)
    peak = None if args.peak == "auto" else float(args.peak)
    return diurnal_model(net, args.days, peak, args.trough, args.step_minutes, args.trace_seed,
                         args.trace_noise, noise_kind=args.noise_kind,
                         noise_halfwidth=args.noise_halfwidth)


def cmd_generate(args) -> int:
    doc = generate_scenario(args.stations, args.cells_per_station, args.grid_w, args.grid_h,
                            args.radius, args.seed, args.out, args.pixels)
    net = load_network(doc)
    print(f"wrote {args.out}: {net.n_cells} cells, {net.n_pixels} pixels")
    if args.trace_out:
        model = _model(args, net)
        dump_document(trace_to_document(model.trace), args.trace_out)
        print(f"wrote {args.trace_out}: {model.trace.horizon_steps} steps "
              f"of {model.trace.step_minutes} min")
    return 0


def cmd_run(args) -> int:
    net = load_network(args.scenario)
    model = _model(args, net)
    controllers = [c for entry in args.controller for c in entry.split(",")]
    if args.distributed:
        controllers = ["rh-distributed" if c == "rh" else c for c in controllers]
    cfg = SynthesisConfig(short_horizon_minutes=args.short_horizon,
                          control_period_minutes=args.period, step_minutes=args.step_minutes,
                          rollouts_per_candidate=args.rollouts, candidate_budget=args.budget,
                          optimizer=args.optimizer, penalty_per_pixel=args.penalty)
    results = harness.run_experiment(
        net, model, controllers, args.horizon, args.seed or [0], args.out,
        Path(args.scenario).stem, cfg, NightScheduleConfig(args.night_start, args.night_end),
        args.max_cells, args.period, args.step_minutes, args.penalty, args.workers)
    print(harness.format_table(results), end="")
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"error: {r.controller_name} seed {r.seed}: {r.status}", file=sys.stderr)
    return 1 if failed else 0


def cmd_oracle(args) -> int:
    net = load_network(args.scenario)
    model = _model(args, net)
    strategy, reward = brute_force_optimal(net, model, args.start_period, args.horizon,
                                           args.period, args.seed, args.rollouts,
                                           max_bits=args.max_bits, penalty_per_pixel=args.penalty)
    print(json.dumps({
        "start_period": strategy.start_period,
        "actions": strategy.bitstrings(),
        "energy": strategy.estimated_energy,
        "penalty": strategy.estimated_penalty,
        "reward": reward,
        "candidates": strategy.candidates_evaluated,
    }, indent=1))
    return 0


def cmd_partition(args) -> int:
    net = load_network(args.scenario)
    parts = partition_network(net, args.max_cells)
    for p in parts:
        print(f"partition {p.id}: cells {list(p.cell_ids)}, {len(p.owned_pixel_ids)} pixels")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cells, pixels = partition_rows(parts)
        (out / "partition_cells.csv").write_text(cells)
        (out / "partition_pixels.csv").write_text(pixels)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellsleep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scenario (and optionally a trace)")
    g.add_argument("--stations", type=int, default=13)
    g.add_argument("--cells-per-station", type=int, default=3)
    g.add_argument("--grid-w", type=int, default=52)
    g.add_argument("--grid-h", type=int, default=52)
    g.add_argument("--pixels", type=int, default=None, help="truncate the grid to this many pixels")
    g.add_argument("--radius", type=float, default=None, help="E-layer coverage radius in pixels")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--trace-out")
    _trace_flags(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="simulate controllers and compare against ALLON")
    r.add_argument("--scenario", required=True)
    _trace_flags(r)
    r.add_argument("--controller", action="append", default=None,
                   help="allon|night|rh|rh-distributed; repeat or comma-separate")
    r.add_argument("--horizon", type=int, default=1440, help="minutes")
    r.add_argument("--short-horizon", type=int, default=180, help="minutes")
    r.add_argument("--period", type=int, default=60, help="control period in minutes")
    r.add_argument("--optimizer", choices=OPTIMIZERS, default="hill_climb")
    r.add_argument("--rollouts", type=int, default=1)
    r.add_argument("--budget", type=int, default=2000)
    r.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
    r.add_argument("--penalty", type=float, default=1000.0)
    r.add_argument("--max-cells", type=int, default=DEFAULT_MAX_CELLS)
    r.add_argument("--distributed", action="store_true", help="use rh-distributed in place of rh")
    r.add_argument("--night-start", type=int, default=60)
    r.add_argument("--night-end", type=int, default=360)
    r.add_argument("--workers", type=int, default=None,
                   help=f"parallel runs (default: ${harness.WORKERS_ENV} or 1)")
    r.add_argument("--out", help="directory for results and schedule logs")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="exact brute-force optimum on a small instance")
    o.add_argument("--scenario", required=True)
    _trace_flags(o)
    o.add_argument("--start-period", type=int, default=0)
    o.add_argument("--horizon", type=int, default=180)
    o.add_argument("--period", type=int, default=60)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--rollouts", type=int, default=1)
    o.add_argument("--max-bits", type=int, default=20)
    o.add_argument("--penalty", type=float, default=1000.0)
    o.set_defaults(func=cmd_oracle)

    p = sub.add_parser("partition", help="show the geographic partitioning")
    p.add_argument("--scenario", required=True)
    p.add_argument("--max-cells", type=int, default=DEFAULT_MAX_CELLS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "controller", "") is None:
        args.controller = ["rh"]
    try:
        return args.func(args)
    except (ScenarioError, ConstraintViolation, PartitionError, HorizonExceeded,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
