"""Receding-horizon ON/OFF strategy synthesis from simulated rollouts.

A candidate over a short horizon of ``m`` control periods and ``k``
controllable cells is a bit matrix ``(m, k)``; bit 1 means ON. Candidates are
scored by the mean reward over a fixed set of rollout seeds (common random
numbers), so every candidate in one call sees identical demand draws.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .network import Network
from .reward import DEFAULT_PENALTY
from .simulator import ActionVector, ConstraintViolation, HorizonExceeded
from .traffic import DemandModel, pixel_demands

OPTIMIZERS = ("exhaustive", "hill_climb", "cross_entropy")

# upper bound on float elements materialised per evaluation chunk
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class SynthesisConfig:
    short_horizon_minutes: int = 180
    control_period_minutes: int = 60
    step_minutes: int = 60
    rollouts_per_candidate: int = 1
    candidate_budget: int = 2000
    optimizer: str = "hill_climb"
    seed: int = 0
    penalty_per_pixel: float = DEFAULT_PENALTY
    max_exhaustive_bits: int = 20
    ce_population: int = 64
    ce_elite_fraction: float = 0.2
    ce_smoothing: float = 0.7

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.control_period_minutes <= 0 or self.step_minutes <= 0:
            raise ValueError("period and step must be positive")
        if self.short_horizon_minutes <= 0 or self.short_horizon_minutes % self.control_period_minutes:
            raise ValueError("short horizon must be a positive multiple of the control period")
        if self.control_period_minutes % self.step_minutes:
            raise ValueError("control period must be a multiple of step_minutes")
        if self.rollouts_per_candidate < 1 or self.candidate_budget < 1:
            raise ValueError("rollouts_per_candidate and candidate_budget must be >= 1")
        if not 0 < self.ce_elite_fraction <= 1 or not 0 < self.ce_smoothing <= 1:
            raise ValueError("cross-entropy fractions must lie in (0, 1]")

    @property
    def periods(self) -> int:
        return self.short_horizon_minutes // self.control_period_minutes


@dataclass(frozen=True, eq=False)
class Strategy:
    start_period: int
    actions: tuple[ActionVector, ...]
    estimated_reward: float = math.nan
    estimated_energy: float = math.nan
    estimated_penalty: float = math.nan
    candidates_evaluated: int = 0
    # (evaluations so far, best estimated reward so far) after each batch
    history: tuple[tuple[int, float], ...] = field(default=(), repr=False)
    wall_time: float = 0.0

    def bitstrings(self) -> list[str]:
        return [a.bitstring() for a in self.actions]


def rollout_seeds(seed: int, start_period: int, n: int) -> list[int]:
    ss = np.random.SeedSequence([int(seed), int(start_period)])
    return [int(s) for s in ss.generate_state(n)]


class RolloutEvaluator:
    """Vectorised reward of candidate schedules over a short window.

    Cells outside ``decision_cells`` are held ON. Only ``pixels`` count toward
    the penalty and only ``energy_cells`` toward energy; both default to the
    whole network. Demand for rollout ``r`` is drawn exactly as a simulation
    seeded with ``seeds[r]`` starting at ``start_minutes`` would draw it.
    """

    def __init__(self, net: Network, model: DemandModel, start_minutes: int,
                 n_periods: int, period_minutes: int, step_minutes: int, seeds,
                 penalty_per_pixel: float = DEFAULT_PENALTY,
                 decision_cells=None, pixels=None, energy_cells=None):
        trace = model.trace
        if period_minutes % step_minutes:
            raise ValueError("control period must be a multiple of step_minutes")
        if n_periods < 1:
            raise ValueError("need at least one period")
        if start_minutes + n_periods * period_minutes > trace.horizon_minutes:
            raise HorizonExceeded("synthesis window runs past the end of the trace")
        self.net = net
        self.n_periods = n_periods
        decision = net.controllable_cells if decision_cells is None else decision_cells
        self.decision = np.array(sorted(decision), dtype=np.int64)
        if np.any(net.coverage_mask[self.decision]):
            raise ConstraintViolation("coverage-layer cells cannot be decision variables")
        pixels = np.arange(net.n_pixels) if pixels is None else np.asarray(pixels, dtype=np.int64)
        counted = np.ones(net.n_cells, dtype=bool)
        if energy_cells is not None:
            counted[:] = False
            counted[list(energy_cells)] = True

        spp = period_minutes // step_minutes
        h = step_minutes / 60.0
        self.step_hours = h
        self.penalty_per_pixel = penalty_per_pixel
        self.n_rollouts = len(seeds)
        if self.n_rollouts < 1:
            raise ValueError("need at least one rollout seed")

        times = start_minutes + step_minutes * np.arange(n_periods * spp)
        idx = np.array([trace.step_at(t) for t in times]).reshape(n_periods, spp)
        demand = np.empty((self.n_rollouts, n_periods, spp, pixels.size))
        for r, s in enumerate(seeds):
            rng = np.random.default_rng(s)
            for j in range(n_periods):
                for q in range(spp):
                    demand[r, j, q] = pixel_demands(model, net, idx[j, q], rng)[pixels]
        self.demand = demand

        fixed = np.ones(net.n_cells, dtype=bool)
        fixed[self.decision] = False
        C = net.contribution_matrix
        self.base = np.asarray(C.T @ fixed.astype(float)).ravel()[pixels]
        self.C_dec = C[self.decision][:, pixels].toarray()
        share = (self.C_dec > 0).astype(float)
        # decision cells whose counted pixels overlap; flips of non-overlapping
        # cells (or in different periods) change the reward additively
        self.interacts = share @ share.T > 0

        samples = trace.samples[:, idx]  # (cells, m, spp)
        cell_e = (net.base_power[:, None, None] * h
                  + net.cost_per_mb[:, None, None] * samples * h).sum(axis=2)
        self.e_fixed = float((cell_e * (fixed & counted)[:, None]).sum())
        self.e_dec = (cell_e[self.decision] * counted[self.decision][:, None]).T  # (m, k)

    @property
    def n_bits(self) -> int:
        return self.n_periods * self.decision.size

    def evaluate(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (energy, penalty, reward) arrays for candidates ``X`` of shape (N, m, k)."""
        X = np.asarray(X, dtype=bool)
        n = X.shape[0] if X.ndim >= 2 else 1  # explicit: -1 is ambiguous when k == 0
        X = X.reshape(n, self.n_periods, self.decision.size)
        energy = np.empty(n)
        penalty = np.empty(n)
        per = max(1, _CHUNK_ELEMENTS // max(1, self.n_periods * self.base.size))
        for lo in range(0, n, per):
            xf = X[lo:lo + per].astype(float)
            contrib = self.base + xf @ self.C_dec  # (N, m, P)
            counts = np.zeros(xf.shape[0], dtype=np.int64)
            for r in range(self.n_rollouts):
                for q in range(self.demand.shape[2]):
                    ok = contrib - self.demand[r, :, q, :] > 0
                    counts += ok.size // xf.shape[0] - np.count_nonzero(ok, axis=(1, 2))
            penalty[lo:lo + per] = counts * self.penalty_per_pixel * self.step_hours / self.n_rollouts
            energy[lo:lo + per] = self.e_fixed + (xf * self.e_dec).sum(axis=(1, 2))
        return energy, penalty, energy + penalty

    def to_actions(self, bits) -> tuple[ActionVector, ...]:
        X = np.asarray(bits, dtype=bool).reshape(self.n_periods, self.decision.size)
        out = []
        for j in range(self.n_periods):
            on = np.ones(self.net.n_cells, dtype=bool)
            on[self.decision] = X[j]
            out.append(ActionVector.build(self.net, on))
        return tuple(out)


def _int_bits(values: np.ndarray, n_bits: int) -> np.ndarray:
    """Integers to MSB-first bit rows."""
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.uint64)
    return ((values[:, None].astype(np.uint64) >> shifts) & np.uint64(1)).astype(bool)


class _Search:
    """Budgeted, cached candidate scoring shared by the stochastic optimizers."""

    def __init__(self, evaluator: RolloutEvaluator, budget: int):
        self.ev = evaluator
        self.n_bits = evaluator.n_bits
        self.space = 1 << self.n_bits if self.n_bits < 63 else None
        self.budget = budget
        self.cache: dict[bytes, tuple[float, float, float]] = {}
        self.best_key = None
        self.best_bits = None
        self.best_parts = None
        self.history: list[tuple[int, float]] = []

    @property
    def used(self) -> int:
        return len(self.cache)

    @property
    def exhausted(self) -> bool:
        return self.used >= self.budget or (self.space is not None and self.used >= self.space)

    def key(self, bits: np.ndarray, reward: float):
        # lower reward, then more cells OFF, then lexicographic with OFF < ON
        return (reward, int(bits.sum()), bits.tobytes())

    def score(self, rows: np.ndarray) -> np.ndarray:
        """Rewards for each row; rows past the budget score +inf."""
        rows = np.asarray(rows, dtype=bool)
        rows = rows.reshape(rows.shape[0] if rows.ndim >= 2 else 1, self.n_bits)
        fresh, fresh_keys = [], set()
        for row in rows:
            k = row.tobytes()
            if k in self.cache or k in fresh_keys:
                continue
            if self.used + len(fresh) >= self.budget:
                break
            fresh.append(row)
            fresh_keys.add(k)
        if fresh:
            batch = np.array(fresh)
            e, p, r = self.ev.evaluate(batch)
            for row, ei, pi, ri in zip(batch, e, p, r):
                self.cache[row.tobytes()] = (float(ei), float(pi), float(ri))
                key = self.key(row, float(ri))
                if self.best_key is None or key < self.best_key:
                    self.best_key, self.best_bits = key, row.copy()
                    self.best_parts = (float(ei), float(pi), float(ri))
            self.history.append((self.used, self.best_key[0]))
        return np.array([self.cache.get(row.tobytes(), (0, 0, math.inf))[2] for row in rows])

    def lowest_unvisited(self) -> np.ndarray | None:
        """Smallest-integer bitstring not scored yet; only for enumerable spaces."""
        if self.space is None or self.space > (1 << 22):
            return None
        for start in range(0, self.space, 4096):
            vals = np.arange(start, min(self.space, start + 4096), dtype=np.uint64)
            rows = _int_bits(vals, self.n_bits)
            for row in rows:
                if row.tobytes() not in self.cache:
                    return row
        return None

    def random_unvisited(self, rng: np.random.Generator, p=0.5, tries: int = 64):
        for _ in range(tries):
            row = rng.random(self.n_bits) < p
            if row.tobytes() not in self.cache:
                return row
        return self.lowest_unvisited()


def _seed_candidates(n_bits: int) -> np.ndarray:
    return np.array([np.ones(n_bits, dtype=bool), np.zeros(n_bits, dtype=bool)])


def _independent_flips(ev: RolloutEvaluator, gains: np.ndarray) -> np.ndarray:
    """Greedy set of improving bit flips whose reward effects do not interact."""
    k = ev.decision.size
    chosen = np.zeros(gains.size, dtype=bool)
    blocked = np.zeros((ev.n_periods, k), dtype=bool)
    for b in np.argsort(-gains, kind="stable"):
        if gains[b] <= 0:
            break
        j, c = divmod(int(b), k)
        if blocked[j, c]:
            continue
        chosen[b] = True
        blocked[j] |= ev.interacts[c]
    return chosen


def _hill_climb(search: _Search, rng: np.random.Generator) -> None:
    """Steepest single-bit descent from all-ON with random restarts.

    Each step also tries the union of non-interacting improving flips, which
    reaches the same local optima in far fewer evaluations.
    """
    n = search.n_bits
    search.score(_seed_candidates(n))
    if n == 0:
        return
    current = np.ones(n, dtype=bool)
    cur_r = search.score(current[None])[0]
    flips = np.eye(n, dtype=bool)
    while not search.exhausted:
        neigh = current ^ flips
        search.score(neigh[rng.permutation(n)])  # random order if the budget truncates
        rewards = search.score(neigh)
        moves = [(rewards.min(), neigh[int(np.argmin(rewards))])]
        chosen = _independent_flips(search.ev, cur_r - rewards)
        if chosen.sum() > 1:
            combined = current ^ chosen
            moves.append((search.score(combined[None])[0], combined))
        r_next, nxt = min(moves, key=lambda m: search.key(m[1], m[0]))
        if search.key(nxt, r_next) < search.key(current, cur_r):
            current, cur_r = nxt, r_next
            continue
        restart = search.random_unvisited(rng)
        if restart is None:
            break
        current = restart
        cur_r = search.score(current[None])[0]
        if not math.isfinite(cur_r):
            break


def _cross_entropy(search: _Search, rng: np.random.Generator, cfg: SynthesisConfig) -> None:
    n = search.n_bits
    search.score(_seed_candidates(n))
    if n == 0:
        return
    prob = np.full(n, 0.5)
    pop = cfg.ce_population
    n_elite = max(1, int(math.ceil(cfg.ce_elite_fraction * pop)))
    lo, hi = 0.5 / n, 1 - 0.5 / n
    stalls = 0
    while not search.exhausted:
        samples = rng.random((pop, n)) < prob
        before = search.used
        rewards = search.score(samples)
        if search.used == before:
            stalls += 1
            if stalls >= 3:
                # sampler collapsed onto visited points: restart it, and on
                # small spaces sweep the remaining candidates directly
                prob[:] = 0.5
                row = search.lowest_unvisited()
                if row is not None:
                    search.score(row[None])
                elif stalls >= 50:
                    break
            continue
        stalls = 0
        order = sorted(range(pop), key=lambda i: search.key(samples[i], rewards[i]))
        elite = samples[order[:n_elite]]
        prob = cfg.ce_smoothing * elite.mean(axis=0) + (1 - cfg.ce_smoothing) * prob
        prob = np.clip(prob, lo, hi)


def _exhaustive(search: _Search, max_bits: int) -> None:
    """Score every candidate in integer order without caching them."""
    n = search.n_bits
    if n > max_bits:
        raise ValueError(f"decision space of {n} bits exceeds the exhaustive cap of {max_bits}")
    total = 1 << n
    chunk = 1 << 14
    evaluated = 0
    for lo in range(0, total, chunk):
        vals = np.arange(lo, min(total, lo + chunk), dtype=np.uint64)
        rows = _int_bits(vals, n)
        e, p, r = search.ev.evaluate(rows)
        evaluated += rows.shape[0]
        tied = np.flatnonzero(r == r.min())
        n_on = rows[tied].sum(axis=1)
        i = int(tied[np.argmin(n_on)])  # first among fewest-ON = lexicographic
        key = search.key(rows[i], float(r[i]))
        if search.best_key is None or key < search.best_key:
            search.best_key, search.best_bits = key, rows[i].copy()
            search.best_parts = (float(e[i]), float(p[i]), float(r[i]))
        search.history.append((evaluated, search.best_key[0]))
    search.evaluated = evaluated


def synthesize_short(net: Network, model: DemandModel, t0: int, cfg: SynthesisConfig,
                     context=None, horizon_minutes: int | None = None,
                     decision_cells=None, pixels=None, energy_cells=None) -> Strategy:
    """Best open-loop schedule over the short horizon starting at period ``t0``.

    ``horizon_minutes`` overrides ``cfg.short_horizon_minutes`` (used to
    truncate the lookahead at the end of a trace). ``context`` is accepted for
    interface compatibility; strategies are open-loop, so it is unused.
    """
    start = time.perf_counter()
    h = cfg.short_horizon_minutes if horizon_minutes is None else horizon_minutes
    if h <= 0 or h % cfg.control_period_minutes:
        raise ValueError("horizon must be a positive multiple of the control period")
    ev = RolloutEvaluator(net, model, t0 * cfg.control_period_minutes,
                          h // cfg.control_period_minutes, cfg.control_period_minutes,
                          cfg.step_minutes,
                          rollout_seeds(cfg.seed, t0, cfg.rollouts_per_candidate),
                          cfg.penalty_per_pixel, decision_cells, pixels, energy_cells)
    search = _Search(ev, cfg.candidate_budget)
    rng = np.random.default_rng([int(cfg.seed), int(t0), 1])
    if cfg.optimizer == "exhaustive":
        _exhaustive(search, cfg.max_exhaustive_bits)
    elif cfg.optimizer == "hill_climb":
        _hill_climb(search, rng)
    else:
        _cross_entropy(search, rng, cfg)
    e, p, r = search.best_parts
    evaluated = getattr(search, "evaluated", search.used)
    return Strategy(t0, ev.to_actions(search.best_bits), r, e, p, evaluated,
                    tuple(search.history), time.perf_counter() - start)


class RecedingHorizonController:
    """Re-plans every control period and executes the first planned action.

    The lookahead is truncated where it would run past the trace. Each
    synthesised strategy is kept in ``strategies`` for inspection, with its
    wall time.
    """

    def __init__(self, net: Network, model: DemandModel, cfg: SynthesisConfig = SynthesisConfig()):
        self.net = net
        self.model = model
        self.cfg = cfg
        self.strategies: list[Strategy] = []

    def horizon_at(self, t_minutes: int) -> int:
        period = self.cfg.control_period_minutes
        remaining = self.model.trace.horizon_minutes - t_minutes
        return max(period, min(self.cfg.short_horizon_minutes, remaining // period * period))

    def plan(self, t_minutes: int, **subgame) -> Strategy:
        t0 = t_minutes // self.cfg.control_period_minutes
        return synthesize_short(self.net, self.model, t0, self.cfg,
                                horizon_minutes=self.horizon_at(t_minutes), **subgame)

    def __call__(self, net, period, t_minutes):
        strategy = self.plan(t_minutes)
        self.strategies.append(strategy)
        return strategy.actions[0]

    @property
    def wall_times(self) -> list[float]:
        return [s.wall_time for s in self.strategies]


def receding_horizon_controller(net: Network, model: DemandModel,
                                cfg: SynthesisConfig = SynthesisConfig()) -> RecedingHorizonController:
    return RecedingHorizonController(net, model, cfg)


def brute_force_optimal(net: Network, model: DemandModel, t0: int, horizon_minutes: int,
                        control_period: int = 60, seed: int = 0, rollouts: int = 1,
                        step_minutes: int | None = None, max_bits: int = 20,
                        penalty_per_pixel: float = DEFAULT_PENALTY) -> tuple[Strategy, float]:
    """Exact argmin of estimated reward by full enumeration.

    Uses the same rollout seeds as :func:`synthesize_short` with
    ``cfg.seed == seed``. Ties go to the lexicographically smallest bitstring
    with OFF < ON.
    """
    start = time.perf_counter()
    step = control_period if step_minutes is None else step_minutes
    if horizon_minutes <= 0 or horizon_minutes % control_period:
        raise ValueError("horizon must be a positive multiple of the control period")
    m = horizon_minutes // control_period
    n_bits = m * net.controllable_cells.size
    if n_bits > max_bits:
        raise ValueError(f"decision space of {n_bits} bits exceeds the cap of {max_bits}")
    ev = RolloutEvaluator(net, model, t0 * control_period, m, control_period, step,
                          rollout_seeds(seed, t0, rollouts), penalty_per_pixel)
    total = 1 << n_bits
    best_val, best_r, best_parts = None, math.inf, None
    chunk = 1 << 14
    for lo in range(0, total, chunk):
        vals = np.arange(lo, min(total, lo + chunk), dtype=np.uint64)
        e, p, r = ev.evaluate(_int_bits(vals, n_bits))
        i = int(np.argmin(r))  # first minimum = smallest integer = lexicographic
        if r[i] < best_r:
            best_val, best_r, best_parts = vals[i], float(r[i]), (float(e[i]), float(p[i]))
    bits = _int_bits(np.array([best_val], dtype=np.uint64), n_bits)[0]
    strategy = Strategy(t0, ev.to_actions(bits), best_r, best_parts[0], best_parts[1],
                        total, (), time.perf_counter() - start)
    return strategy, best_r
