"""Per-cell demand traces, their uniform spread onto pixels, and noise."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sparse

from .network import Network, ScenarioError, _as_document

NOISE_KINDS = ("none", "multiplicative_uniform")


@dataclass(frozen=True, eq=False)
class DemandTrace:
    """Demand samples in megabits/hour, shape ``(n_cells, horizon_steps)``.

    Each sample holds for ``step_minutes`` (zero-order hold).
    """

    step_minutes: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ScenarioError("trace samples must be a 2-D array (cells x steps)")
        if self.step_minutes <= 0:
            raise ScenarioError("step_minutes must be positive")
        if not np.all(np.isfinite(samples)) or np.any(samples < 0):
            raise ScenarioError("negative or non-finite demand in trace")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def horizon_steps(self) -> int:
        return self.samples.shape[1]

    @property
    def horizon_minutes(self) -> int:
        return self.horizon_steps * self.step_minutes

    def step_at(self, t_minutes: int) -> int:
        return int(t_minutes) // self.step_minutes

    def __eq__(self, other):
        if not isinstance(other, DemandTrace):
            return NotImplemented
        return (self.step_minutes == other.step_minutes
                and np.array_equal(self.samples, other.samples))

    __hash__ = object.__hash__


@dataclass(frozen=True)
class DemandModel:
    trace: DemandTrace
    noise_kind: str = "none"
    noise_halfwidth: float = 0.0

    def __post_init__(self):
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if not 0 <= self.noise_halfwidth < 1:
            raise ValueError("noise_halfwidth must lie in [0, 1)")

    @property
    def deterministic(self) -> bool:
        return self.noise_kind == "none"


@lru_cache(maxsize=32)
def spread_matrix(net: Network) -> sparse.csr_matrix:
    """Pixels x cells matrix with 1/|pixels(c)| wherever cell c covers the pixel."""
    m = net.pixel_matrix.copy()
    m.data[:] = 1.0
    counts = np.maximum(net.cell_pixel_counts, 1)
    return (m @ sparse.diags(1.0 / counts)).tocsr()


def _noise(model: DemandModel, rng: np.random.Generator, size):
    h = model.noise_halfwidth
    return rng.uniform(1.0 - h, 1.0 + h, size=size)


def pixel_demands(model: DemandModel, net: Network, t: int,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Demand at every pixel for trace step ``t``.

    With multiplicative noise one factor per pixel is drawn from ``rng``, in
    pixel order, so the draw sequence depends only on the network size.
    """
    trace = model.trace
    if not 0 <= t < trace.horizon_steps:
        raise IndexError(f"trace step {t} outside [0, {trace.horizon_steps})")
    base = spread_matrix(net) @ trace.samples[:, t]
    if model.deterministic:
        return base
    if rng is None:
        raise ValueError("a random source is required for a stochastic demand model")
    return base * _noise(model, rng, net.n_pixels)


def pixel_demand(model: DemandModel, net: Network, t: int, pixel_id: int,
                 rng: np.random.Generator | None = None) -> float:
    trace = model.trace
    if not 0 <= t < trace.horizon_steps:
        raise IndexError(f"trace step {t} outside [0, {trace.horizon_steps})")
    counts = net.cell_pixel_counts
    total = 0.0
    for cid in net.covering_index[pixel_id]:
        total += trace.samples[cid, t] / counts[cid]
    if model.deterministic:
        return total
    if rng is None:
        raise ValueError("a random source is required for a stochastic demand model")
    return total * float(_noise(model, rng, None))


def pixel_share_weights(net: Network) -> np.ndarray:
    """Pixel demand produced by one unit of demand on every cell."""
    return np.asarray(spread_matrix(net).sum(axis=1)).ravel()


def max_uniform_peak(net: Network, on=None) -> float:
    """Largest equal per-cell demand the given cells can serve everywhere.

    Any strictly smaller demand leaves every pixel with contribution above
    demand. ``on`` defaults to every cell ON.
    """
    if on is None:
        on = np.ones(net.n_cells, dtype=bool)
    contrib = net.contributions_under(on)
    return float(np.min(contrib / pixel_share_weights(net)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def diurnal_profile(minutes, trough_fraction: float, trough_minute: int = 180) -> np.ndarray:
    """Daily shape in [trough_fraction, 1], lowest at ``trough_minute``."""
    phase = 2 * np.pi * (np.asarray(minutes, dtype=float) - trough_minute) / 1440.0
    return trough_fraction + (1.0 - trough_fraction) * (1.0 - np.cos(phase)) / 2.0


def generate_diurnal_trace(net: Network, days: int, peak_demand: float,
                           trough_fraction: float, step_minutes: int = 60,
                           rng=0, noise: float = 0.0,
                           trough_minute: int = 180) -> DemandTrace:
    """Synthetic per-cell daily demand: cosine day curve times gaussian noise.

    ``noise`` is the relative standard deviation of an independent
    multiplicative factor per cell and step; values are clamped at zero.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if not 0 <= trough_fraction <= 1:
        raise ValueError("trough_fraction must lie in [0, 1]")
    if step_minutes <= 0 or 1440 % step_minutes:
        raise ValueError("step_minutes must divide 1440")
    if peak_demand < 0 or noise < 0:
        raise ValueError("peak_demand and noise must be non-negative")
    rng = as_generator(rng)
    steps = days * 1440 // step_minutes
    minutes = (np.arange(steps) * step_minutes) % 1440
    shape = peak_demand * diurnal_profile(minutes, trough_fraction, trough_minute)
    samples = np.tile(shape, (net.n_cells, 1))
    if noise > 0:
        samples = samples * (1.0 + noise * rng.standard_normal(samples.shape))
    return DemandTrace(step_minutes, np.maximum(samples, 0.0))


def load_trace(source, net: Network) -> DemandTrace:
    doc = _as_document(source)
    if not isinstance(doc, Mapping) or "step_minutes" not in doc or "samples" not in doc:
        raise ScenarioError("trace document needs 'step_minutes' and 'samples'")
    step = doc["step_minutes"]
    if isinstance(step, bool) or not isinstance(step, int) or step <= 0:
        raise ScenarioError("trace: step_minutes must be a positive integer")
    rows: dict[int, list] = {}
    for i, entry in enumerate(doc["samples"]):
        cid = entry.get("cell")
        if isinstance(cid, bool) or not isinstance(cid, int) or not 0 <= cid < net.n_cells:
            raise ScenarioError(f"trace samples[{i}]: unknown cell {cid!r}")
        if cid in rows:
            raise ScenarioError(f"trace samples[{i}]: duplicate cell {cid}")
        values = entry.get("values")
        if not isinstance(values, list):
            raise ScenarioError(f"trace samples[{i}]: 'values' must be an array")
        rows[cid] = values
    missing = set(range(net.n_cells)) - set(rows)
    if missing:
        raise ScenarioError(f"trace: no samples for cells {sorted(missing)}")
    lengths = {len(v) for v in rows.values()}
    if len(lengths) != 1 or 0 in lengths:
        raise ScenarioError(f"ragged trace: sample lengths {sorted(lengths)}")
    try:
        samples = np.array([rows[c] for c in range(net.n_cells)], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"trace: non-numeric demand ({exc})") from None
    return DemandTrace(step, samples)


def trace_to_document(trace: DemandTrace) -> dict:
    return {
        "step_minutes": trace.step_minutes,
        "samples": [{"cell": c, "values": row.tolist()}
                    for c, row in enumerate(trace.samples)],
    }


def restrict_trace(trace: DemandTrace, cell_ids: Sequence[int]) -> DemandTrace:
    return DemandTrace(trace.step_minutes, trace.samples[list(cell_ids)])
