"""Radio network topology: cells, frequency layers, pixels and coverage."""

from __future__ import annotations

import enum
import json
import os
import types
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sparse


class ScenarioError(ValueError):
    """Raised when a scenario document or trace fails validation."""


class FrequencyLayer(enum.Enum):
    E = 800
    V = 900
    T = 1800
    A = 2100
    L = 2600

    @property
    def code(self) -> str:
        return self.name

    @property
    def frequency_mhz(self) -> int:
        return self.value

    @property
    def is_coverage_layer(self) -> bool:
        # 800 MHz carries coverage and stays on
        return self is FrequencyLayer.E

    @classmethod
    def from_code(cls, code: str) -> "FrequencyLayer":
        try:
            return cls[code]
        except KeyError:
            raise ScenarioError(f"unknown frequency layer {code!r}") from None


@dataclass(frozen=True)
class Cell:
    id: int
    station_id: int
    layer: FrequencyLayer
    base_power: float
    cost_per_mb: float
    contributions: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.base_power < 0 or self.cost_per_mb < 0:
            raise ScenarioError(f"cell {self.id}: negative power or cost")
        for pixel, cap in self.contributions.items():
            if not cap > 0:
                raise ScenarioError(
                    f"cell {self.id}: contribution to pixel {pixel} must be > 0, got {cap}")
        object.__setattr__(self, "contributions",
                           types.MappingProxyType(dict(self.contributions)))

    @property
    def is_coverage_layer(self) -> bool:
        return self.layer.is_coverage_layer

    def __reduce__(self):
        # mappingproxy does not pickle; needed for process-pool experiment runs
        return (Cell, (self.id, self.station_id, self.layer, self.base_power,
                       self.cost_per_mb, dict(self.contributions)))


@dataclass(frozen=True)
class Pixel:
    id: int
    grid_x: int
    grid_y: int


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable topology. Build through :func:`load_network` or :meth:`from_parts`.

    The sparse per-cell contribution maps are the canonical data; the array
    views below are derived caches used by the vectorised simulator.
    """

    cells: tuple[Cell, ...]
    pixels: tuple[Pixel, ...]
    covering_index: tuple[tuple[int, ...], ...]

    @classmethod
    def from_parts(cls, cells: Iterable[Cell], pixels: Iterable[Pixel]) -> "Network":
        cells = tuple(sorted(cells, key=lambda c: c.id))
        pixels = tuple(sorted(pixels, key=lambda p: p.id))
        if [c.id for c in cells] != list(range(len(cells))):
            raise ScenarioError("duplicate or non-dense cell ids")
        if [p.id for p in pixels] != list(range(len(pixels))):
            raise ScenarioError("duplicate or non-dense pixel ids")
        if len({(p.grid_x, p.grid_y) for p in pixels}) != len(pixels):
            raise ScenarioError("duplicate pixel grid coordinates")
        if not cells:
            raise ScenarioError("scenario has no cells")

        covering: list[list[int]] = [[] for _ in pixels]
        for cell in cells:
            for pixel in cell.contributions:
                if not 0 <= pixel < len(pixels):
                    raise ScenarioError(f"cell {cell.id}: unknown pixel {pixel}")
                covering[pixel].append(cell.id)

        for pid, cover in enumerate(covering):
            if not any(cells[c].is_coverage_layer for c in cover):
                raise ScenarioError(
                    f"uncovered pixel under coverage constraint: pixel {pid} "
                    "has no E-layer (800 MHz) cell")

        return cls(cells, pixels, tuple(tuple(c) for c in covering))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.cells == other.cells and self.pixels == other.pixels

    __hash__ = object.__hash__

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_pixels(self) -> int:
        return len(self.pixels)

    @cached_property
    def contribution_matrix(self) -> sparse.csr_matrix:
        """Cells x pixels capacity matrix (megabits/hour)."""
        rows, cols, vals = [], [], []
        for cell in self.cells:
            for pixel, cap in cell.contributions.items():
                rows.append(cell.id)
                cols.append(pixel)
                vals.append(cap)
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_cells, self.n_pixels))
        m.sort_indices()
        return m

    @cached_property
    def pixel_matrix(self) -> sparse.csr_matrix:
        """Pixels x cells transpose of :attr:`contribution_matrix`."""
        return self.contribution_matrix.T.tocsr()

    @cached_property
    def coverage_mask(self) -> np.ndarray:
        mask = np.array([c.is_coverage_layer for c in self.cells], dtype=bool)
        mask.setflags(write=False)
        return mask

    @cached_property
    def controllable_cells(self) -> np.ndarray:
        idx = np.flatnonzero(~self.coverage_mask)
        idx.setflags(write=False)
        return idx

    @cached_property
    def base_power(self) -> np.ndarray:
        return _frozen([c.base_power for c in self.cells])

    @cached_property
    def cost_per_mb(self) -> np.ndarray:
        return _frozen([c.cost_per_mb for c in self.cells])

    @cached_property
    def cell_pixel_counts(self) -> np.ndarray:
        """Number of pixels each cell covers."""
        counts = np.array([len(c.contributions) for c in self.cells], dtype=np.int64)
        counts.setflags(write=False)
        return counts

    @cached_property
    def pixel_xy(self) -> np.ndarray:
        xy = np.array([(p.grid_x, p.grid_y) for p in self.pixels], dtype=float).reshape(-1, 2)
        xy.setflags(write=False)
        return xy

    def stations(self) -> dict[int, list[int]]:
        """Map station id -> sorted cell ids."""
        out: dict[int, list[int]] = {}
        for cell in self.cells:
            out.setdefault(cell.station_id, []).append(cell.id)
        return dict(sorted(out.items()))

    def contributions_under(self, on: Sequence[bool] | np.ndarray) -> np.ndarray:
        """Per-pixel total contribution for a whole action vector."""
        on = np.asarray(on, dtype=float)
        return self.pixel_matrix @ on

    def subnetwork(self, cell_ids: Sequence[int], pixel_ids: Sequence[int]) -> "Network":
        """Extract cells/pixels, renumbering both densely in the given order.

        Contributions to pixels outside ``pixel_ids`` are dropped.
        """
        pixel_map = {old: new for new, old in enumerate(pixel_ids)}
        cells = []
        for new, old in enumerate(cell_ids):
            c = self.cells[old]
            contrib = {pixel_map[p]: v for p, v in c.contributions.items() if p in pixel_map}
            cells.append(Cell(new, c.station_id, c.layer, c.base_power, c.cost_per_mb, contrib))
        pixels = [Pixel(new, self.pixels[old].grid_x, self.pixels[old].grid_y)
                  for new, old in enumerate(pixel_ids)]
        return Network.from_parts(cells, pixels)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def total_contribution(net: Network, action, pixel_id: int) -> float:
    """Sum of contributions to ``pixel_id`` from every cell that is ON."""
    on = getattr(action, "on", action)
    total = 0.0
    for cid in net.covering_index[pixel_id]:
        if on[cid]:
            total += net.cells[cid].contributions[pixel_id]
    return total


def _require(doc: Mapping[str, Any], key: str, where: str):
    if key not in doc:
        raise ScenarioError(f"{where}: missing field {key!r}")
    return doc[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    return value


def load_network(source) -> Network:
    """Parse and validate a scenario document.

    ``source`` may be a mapping, a JSON string, or a path to a JSON file.
    """
    doc = _as_document(source)
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be an object")
    raw_cells = _require(doc, "cells", "scenario")
    raw_pixels = _require(doc, "pixels", "scenario")
    if not isinstance(raw_cells, list) or not isinstance(raw_pixels, list):
        raise ScenarioError("scenario: 'cells' and 'pixels' must be arrays")

    pixels = []
    for i, p in enumerate(raw_pixels):
        where = f"pixels[{i}]"
        pixels.append(Pixel(_integer(_require(p, "id", where), where),
                            _integer(_require(p, "x", where), where),
                            _integer(_require(p, "y", where), where)))

    cells = []
    for i, c in enumerate(raw_cells):
        where = f"cells[{i}]"
        contrib: dict[int, float] = {}
        for j, entry in enumerate(_require(c, "contributions", where)):
            w = f"{where}.contributions[{j}]"
            pixel = _integer(_require(entry, "pixel", w), w)
            if pixel in contrib:
                raise ScenarioError(f"{w}: duplicate pixel {pixel}")
            contrib[pixel] = _number(_require(entry, "capacity", w), w)
        cells.append(Cell(
            id=_integer(_require(c, "id", where), where),
            station_id=_integer(_require(c, "station_id", where), where),
            layer=FrequencyLayer.from_code(_require(c, "layer", where)),
            base_power=_number(_require(c, "base_power", where), where),
            cost_per_mb=_number(_require(c, "cost_per_mb", where), where),
            contributions=contrib,
        ))
    return Network.from_parts(cells, pixels)


def network_to_document(net: Network) -> dict:
    return {
        "cells": [
            {
                "id": c.id,
                "station_id": c.station_id,
                "layer": c.layer.code,
                "base_power": c.base_power,
                "cost_per_mb": c.cost_per_mb,
                "contributions": [{"pixel": p, "capacity": v}
                                  for p, v in sorted(c.contributions.items())],
            }
            for c in net.cells
        ],
        "pixels": [{"id": p.id, "x": p.grid_x, "y": p.grid_y} for p in net.pixels],
    }


def dump_document(doc: Mapping, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=1))
        fh.write("\n")


def _as_document(source):
    if isinstance(source, Mapping):
        return source
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        try:
            if isinstance(source, str) and text.lstrip().startswith("{"):
                return json.loads(text)
            with open(source) as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"malformed JSON: {exc}") from None
    raise ScenarioError(f"cannot read scenario from {type(source).__name__}")
