"""Acceptance gate: one test per criterion, each printing a pass/fail line."""

import time

import numpy as np
import pytest

from cellsleep import harness
from cellsleep.baselines import allon_controller, night_schedule_controller
from cellsleep.network import Cell, Network, Pixel, load_network
from cellsleep.partition import distributed_controller, partition_network
from cellsleep.reward import RewardParams, pixel_penalty, step_reward
from cellsleep.scenario import CITY_SYD, diurnal_model, generate_scenario
from cellsleep.simulator import (ActionVector, ConstraintViolation, SimState, do_sim_step,
                                 fixed_schedule_controller, run)
from cellsleep.synthesis import (SynthesisConfig, brute_force_optimal,
                                 receding_horizon_controller, synthesize_short)
from cellsleep.traffic import DemandModel, DemandTrace, restrict_trace

from conftest import ACCEPTANCE_LINES, E, T, A, make_net
from test_reward import HAND_TABLES


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def test_criterion_1_reward_definition(two_by_two):
    start = time.perf_counter()
    worst = 0.0
    for (d0, d1), table in HAND_TABLES.items():
        for action, expected in table.items():
            got = step_reward(two_by_two, list(map(bool, action)), [d0 / 2, d0 / 2 + d1],
                              [d0, d1], RewardParams())
            worst = max(worst, abs(got[0] - expected[0]), abs(got[1] - expected[1]))
    strict = pixel_penalty(4.0, 4.0, RewardParams()) == 1000.0
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-12 and strict and elapsed < 1,
           f"hand table max error {worst:.1e} (tol 1e-12), equality penalised={strict}, "
           f"{elapsed:.3f}s")


def oracle_instance(rng):
    """Dyadic random instance with 1-3 capacity cells; values are exact in binary."""
    n_pixels = int(rng.integers(1, 5))
    k = int(rng.integers(1, 4))
    q = lambda lo, hi: float(rng.integers(lo * 4, hi * 4)) / 4
    cells = [(E, q(20, 150), q(0, 1) / 4, {p: q(1, 6) for p in range(n_pixels)})]
    for _ in range(k):
        cover = rng.choice(n_pixels, size=rng.integers(1, n_pixels + 1), replace=False)
        cells.append((T, q(10, 150), q(0, 1) / 8, {int(p): q(1, 10) for p in sorted(cover)}))
    net = make_net(cells, n_pixels)
    m = int(rng.integers(1, 4))
    samples = rng.integers(0, 48, size=(net.n_cells, m + 2)) / 4
    return net, DemandModel(DemandTrace(60, samples)), m


def test_criterion_2_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches, n = [], 25
    for i in range(n):
        net, model, m = oracle_instance(rng)
        t0 = int(rng.integers(0, 3))
        _, best = brute_force_optimal(net, model, t0, 60 * m)
        space = 2 ** (m * net.controllable_cells.size)
        for opt in ("exhaustive", "hill_climb", "cross_entropy"):
            cfg = SynthesisConfig(short_horizon_minutes=60 * m, optimizer=opt,
                                  candidate_budget=2 * space, seed=i)
            got = synthesize_short(net, model, t0, cfg).estimated_reward
            if got != best:
                mismatches.append((i, opt, got, best))
    elapsed = time.perf_counter() - start
    record(2, not mismatches and elapsed < 60,
           f"{n} instances x 3 optimizers, {len(mismatches)} mismatches vs brute force "
           f"(exact equality), {elapsed:.1f}s")


@pytest.fixture(scope="module")
def city_syd():
    net = load_network(generate_scenario(**CITY_SYD, seed=0))
    return net, diurnal_model(net, days=1, trough_fraction=0.1)


def test_criterion_3_energy_savings(city_syd):
    net, model = city_syd
    start = time.perf_counter()
    cfg = SynthesisConfig(short_horizon_minutes=180, control_period_minutes=60)
    rows = harness.run_experiment(net, model, ["rh"], horizon_minutes=1440,
                                  scenario_name="city-syd", cfg=cfg)
    elapsed = time.perf_counter() - start
    rh = rows[1]
    ACCEPTANCE_LINES.append("    " + harness.format_table(rows).replace("\n", "\n    ").rstrip())
    record(3, rh.ok and rh.penalty == 0 and rh.savings_vs_allon >= 0.05 and elapsed < 600,
           f"{net.n_cells} cells / {net.n_pixels} pixels, rh penalty {rh.penalty}, savings "
           f"{100 * rh.savings_vs_allon:.1f}% (need >= 5%), {elapsed:.1f}s")


def disjoint_instance():
    """Two 4-cell stations, each covering only its half of a 6 x 6 grid."""
    pixels = [Pixel(y * 6 + x, x, y) for y in range(6) for x in range(6)]
    halves = [[p.id for p in pixels if p.grid_x < 3], [p.id for p in pixels if p.grid_x >= 3]]
    layers = [E, T, A, T]
    cells = []
    for sid, half in enumerate(halves):
        for j, layer in enumerate(layers):
            cover = half if j == 0 else half[j - 1::3]
            cells.append(Cell(len(cells), sid, layer, 40.0 + 20 * j + sid, 0.02,
                              {p: 3.0 + 2 * j for p in cover}))
    return Network.from_parts(cells, pixels)


def test_criterion_4_distributed_consistency(tiny_line):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    noisy = DemandModel(DemandTrace(60, rng.uniform(0, 30, size=(4, 12))),
                        "multiplicative_uniform", 0.3)
    cfg = SynthesisConfig(rollouts_per_candidate=4, candidate_budget=60, seed=8)
    mono = run(tiny_line, noisy, receding_horizon_controller(tiny_line, noisy, cfg), 720, seed=5)
    dist = run(tiny_line, noisy, distributed_controller(
        tiny_line, noisy, partition_network(tiny_line), cfg), 720, seed=5)
    identical = dist.schedule == mono.schedule

    net = disjoint_instance()
    model = DemandModel(DemandTrace(60, rng.uniform(0, 40, size=(net.n_cells, 12))))
    parts = partition_network(net, 4)
    merged = run(net, model, distributed_controller(net, model, parts, cfg), 720)
    total = 0.0
    for p in parts:
        sub = net.subnetwork(p.cell_ids, p.owned_pixel_ids)
        sub_model = DemandModel(restrict_trace(model.trace, p.cell_ids))
        sched = [np.array([r.actions[c] == "1" for c in p.cell_ids]) for r in merged.schedule]
        total += run(sub, sub_model, fixed_schedule_controller(sched), 720).breakdown.reward
    rel = abs(merged.breakdown.reward - total) / abs(total)
    elapsed = time.perf_counter() - start
    record(4, identical and len(parts) == 2 and rel <= 1e-9 and elapsed < 60,
           f"single partition schedule-identical={identical}; two disjoint partitions "
           f"relative reward gap {rel:.1e} (tol 1e-9), {elapsed:.1f}s")


def fuzz_network(rng):
    n_pixels = int(rng.integers(1, 7))
    cells = [(E, 50.0, 0.01, {p: float(rng.uniform(0.5, 5)) for p in range(n_pixels)})]
    for _ in range(int(rng.integers(0, 5))):
        layer = [E, T, A][int(rng.integers(3))]
        cover = rng.choice(n_pixels, size=rng.integers(1, n_pixels + 1), replace=False)
        cells.append((layer, float(rng.uniform(0, 200)), 0.01,
                      {int(p): float(rng.uniform(0.5, 8)) for p in cover}))
    return make_net(cells, n_pixels)


def test_criterion_5_constraint_safety():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    calls = violations = 0
    while calls < 10_000:
        net = fuzz_network(rng)
        steps = int(rng.integers(1, 5))
        noise = float(rng.choice([0.0, 0.5]))
        model = DemandModel(DemandTrace(60, rng.uniform(0, 40, size=(net.n_cells, steps))),
                            "multiplicative_uniform" if noise else "none", noise)
        for _ in range(25):
            m = int(rng.integers(1, steps + 1))
            cfg = SynthesisConfig(short_horizon_minutes=60 * m,
                                  optimizer=["exhaustive", "hill_climb", "cross_entropy"][calls % 3],
                                  candidate_budget=int(rng.integers(1, 40)),
                                  seed=int(rng.integers(1000)), ce_population=8)
            t0 = int(rng.integers(0, steps - m + 1))
            subgame = {}
            if rng.random() < 0.3:
                cap = net.controllable_cells
                subgame = dict(decision_cells=cap[rng.random(cap.size) < 0.5],
                               pixels=np.flatnonzero(rng.random(net.n_pixels) < 0.7))
            strategy = synthesize_short(net, model, t0, cfg, **subgame)
            violations += sum(not a.on[net.coverage_mask].all() for a in strategy.actions)
            calls += 1
    elapsed = time.perf_counter() - start

    rejected = 0
    net = make_net([(E, 1.0, 0.0, {0: 1.0}), (T, 1.0, 0.0, {0: 1.0})], 1)
    model = DemandModel(DemandTrace(60, np.ones((2, 2))))
    for inject in (lambda: ActionVector.build(net, [False, True]),
                   lambda: do_sim_step(SimState.start(net, model, 0), [False, True]),
                   lambda: run(net, model, lambda n, k, t: [False, False], 60)):
        try:
            inject()
        except ConstraintViolation:
            rejected += 1
    record(5, violations == 0 and rejected == 3 and elapsed < 120,
           f"{calls} fuzzed optimizer calls, {violations} OFF coverage cells emitted; "
           f"{rejected}/3 injected violations rejected, {elapsed:.1f}s")


def spiked(model, hours, level):
    samples = model.trace.samples.copy()
    samples[:, hours] = level
    return DemandModel(DemandTrace(model.trace.step_minutes, samples))


def test_criterion_6_baseline_ordering(city_syd):
    net0, model0 = city_syd
    scenarios = [(net0, model0)]
    for seed in (1, 2):
        net = load_network(generate_scenario(5, 3, 20, 20, seed=seed))
        scenarios.append((net, diurnal_model(net, trough_fraction=0.1, seed=seed)))
    cfg = SynthesisConfig()
    ordered = True
    detail = []
    for net, model in scenarios:
        allon = run(net, model, allon_controller()).breakdown
        night = run(net, model, night_schedule_controller()).breakdown
        rh = run(net, model, receding_horizon_controller(net, model, cfg)).breakdown
        ok = (night.penalty == 0 and night.energy < allon.energy
              and rh.reward <= night.reward <= allon.reward)
        ordered &= ok
        detail.append(f"{rh.reward:.0f}<={night.reward:.0f}<={allon.reward:.0f}")

    net, model = scenarios[1]
    peak = model.trace.samples.max()
    spike = spiked(model, [2, 3, 4], peak)
    night = run(net, spike, night_schedule_controller()).breakdown
    rh = run(net, spike, receding_horizon_controller(net, spike, cfg)).breakdown
    record(6, ordered and night.penalty > 0 and rh.penalty == 0,
           f"rh<=night<=allon on {len(scenarios)} diurnal scenarios ({', '.join(detail)}); "
           f"night spike: night penalty {night.penalty:.0f}, rh penalty {rh.penalty:.0f}")


def test_criterion_7_determinism(tmp_path):
    net = load_network(generate_scenario(4, 3, 16, 16, seed=7))
    model = diurnal_model(net, trough_fraction=0.1, trace_noise=0.1, seed=7,
                          noise_kind="multiplicative_uniform", noise_halfwidth=0.2)
    cfg = SynthesisConfig(rollouts_per_candidate=3, candidate_budget=150)
    outputs = []
    for attempt, workers in enumerate((1, 1, 2)):
        out = tmp_path / str(attempt)
        harness.run_experiment(net, model, list(harness.CONTROLLERS), 720, seeds=[0, 11],
                               output_dir=out, scenario_name="det", cfg=cfg, workers=workers)
        files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "timings.csv")
        outputs.append({str(p.relative_to(out)): p.read_bytes() for p in files})
    same = outputs[0] == outputs[1] == outputs[2]
    record(7, same and len(outputs[0]) == 10,
           f"{len(outputs[0])} output files byte-identical across 3 re-runs "
           f"(serial, serial, 2 workers)={same}")
