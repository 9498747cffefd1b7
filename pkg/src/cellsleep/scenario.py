"""Synthetic scenario documents standing in for operator data."""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from .network import FrequencyLayer, ScenarioError, dump_document, load_network
from .traffic import DemandModel, generate_diurnal_trace, max_uniform_peak

# cell k of a station gets LAYER_ORDER[k]; capacity layers cycle past five
LAYER_ORDER = (FrequencyLayer.E, FrequencyLayer.T, FrequencyLayer.A,
               FrequencyLayer.L, FrequencyLayer.V)

# per layer: radius as a fraction of the coverage radius, peak capacity
# (megabits/hour at the mast), base power per hour, cost per megabit
LAYER_PROFILE = {
    FrequencyLayer.E: (1.0, 40.0, 120.0, 0.004),
    FrequencyLayer.V: (0.85, 50.0, 130.0, 0.004),
    FrequencyLayer.T: (0.6, 120.0, 200.0, 0.003),
    FrequencyLayer.A: (0.5, 140.0, 220.0, 0.003),
    FrequencyLayer.L: (0.4, 160.0, 240.0, 0.003),
}

CITY_SYD = dict(n_stations=13, cells_per_station=3, grid_w=52, grid_h=52, n_pixels=2687)
FRYDENDAL = dict(n_stations=36, cells_per_station=[3] * 35 + [2], grid_w=79, grid_h=78,
                 n_pixels=6138)


def _layers_for(n: int) -> list[FrequencyLayer]:
    caps = LAYER_ORDER[1:]
    return [LAYER_ORDER[0]] + [caps[k % len(caps)] for k in range(n - 1)]


def _place_stations(xy: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Farthest-point placement over pixel centres, with sub-pixel jitter."""
    first = int(rng.integers(len(xy)))
    chosen = [first]
    dist = np.hypot(*(xy - xy[first]).T)
    for _ in range(n - 1):
        far = np.flatnonzero(dist == dist.max())
        pick = int(far[rng.integers(far.size)])
        chosen.append(pick)
        dist = np.minimum(dist, np.hypot(*(xy - xy[pick]).T))
    return xy[chosen] + rng.uniform(-0.4, 0.4, size=(n, 2))


def generate_scenario(n_stations: int, cells_per_station: int | Sequence[int],
                      grid_w: int, grid_h: int, coverage_radius: float | None = None,
                      seed: int = 0, output_path=None, n_pixels: int | None = None,
                      max_retries: int = 8) -> dict:
    """Build a scenario document on a ``grid_w x grid_h`` pixel grid.

    Pixels are numbered row-major and truncated to ``n_pixels`` when given.
    Every station has one E-layer cell; capacity cells reach a fraction of the
    coverage radius. Contributions fall linearly from the layer's peak at the
    mast to half of it at the cell edge. If the E layer leaves a pixel
    uncovered the E radius grows by 25% per retry.
    """
    if n_stations < 1 or grid_w < 1 or grid_h < 1:
        raise ValueError("sizes must be >= 1")
    if isinstance(cells_per_station, int):
        cells_per_station = [cells_per_station] * n_stations
    cells_per_station = list(cells_per_station)
    if len(cells_per_station) != n_stations or min(cells_per_station) < 1:
        raise ValueError("need one cells_per_station entry >= 1 per station")
    total = grid_w * grid_h
    n_pixels = total if n_pixels is None else n_pixels
    if not 1 <= n_pixels <= total:
        raise ValueError(f"n_pixels must lie in [1, {total}]")
    if coverage_radius is None:
        coverage_radius = 1.5 * math.sqrt(n_pixels / (math.pi * n_stations)) + 1.0
    if coverage_radius <= 0:
        raise ValueError("coverage_radius must be positive")

    ids = np.arange(n_pixels)
    xy = np.column_stack([ids % grid_w, ids // grid_w]).astype(float)
    rng = np.random.default_rng(seed)
    sites = _place_stations(xy, n_stations, rng)
    dist = np.hypot(xy[None, :, 0] - sites[:, None, 0], xy[None, :, 1] - sites[:, None, 1])

    e_radius = coverage_radius
    for _ in range(max_retries + 1):
        if np.all((dist <= e_radius).any(axis=0)):
            break
        e_radius *= 1.25
    else:
        raise ScenarioError("generator could not cover every pixel with the E layer")

    cells = []
    for sid, n in enumerate(cells_per_station):
        for layer in _layers_for(n):
            frac, peak, power, cost = LAYER_PROFILE[layer]
            radius = e_radius if layer is FrequencyLayer.E else coverage_radius * frac
            d = dist[sid]
            inside = np.flatnonzero(d <= radius)
            caps = np.round(peak * (1.0 - 0.5 * d[inside] / radius), 4)
            cells.append({
                "id": len(cells),
                "station_id": sid,
                "layer": layer.code,
                "base_power": power,
                "cost_per_mb": cost,
                "contributions": [{"pixel": int(p), "capacity": float(c)}
                                  for p, c in zip(inside, caps)],
            })
    doc = {
        "cells": cells,
        "pixels": [{"id": int(i), "x": int(x), "y": int(y)} for i, (x, y) in enumerate(xy)],
    }
    load_network(doc)
    if output_path is not None:
        dump_document(doc, output_path)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def diurnal_model(net, days: int = 1, peak: float | None = None, trough_fraction: float = 0.1,
                  step_minutes: int = 60, seed: int = 0, trace_noise: float = 0.0,
                  headroom: float = 0.8, noise_kind: str = "none",
                  noise_halfwidth: float = 0.0) -> DemandModel:
    """Diurnal demand model; ``peak=None`` picks ``headroom`` times the
    largest equal per-cell demand the all-ON network serves everywhere."""
    if peak is None:
        peak = headroom * max_uniform_peak(net)
    trace = generate_diurnal_trace(net, days, peak, trough_fraction, step_minutes,
                                   np.random.default_rng(seed), trace_noise)
    return DemandModel(trace, noise_kind, noise_halfwidth)
