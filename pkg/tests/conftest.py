import numpy as np
import pytest
from hypothesis import strategies as st

from cellsleep.network import Cell, FrequencyLayer, Network, Pixel
from cellsleep.traffic import DemandModel, DemandTrace

E, T, A = FrequencyLayer.E, FrequencyLayer.T, FrequencyLayer.A

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_net(cells, n_pixels, width=None):
    """cells: list of (layer, base_power, cost_per_mb, {pixel: capacity}[, station])."""
    width = width or n_pixels
    out = []
    for i, entry in enumerate(cells):
        layer, power, cost, contrib = entry[:4]
        station = entry[4] if len(entry) > 4 else i
        out.append(Cell(i, station, layer, power, cost, contrib))
    pixels = [Pixel(p, p % width, p // width) for p in range(n_pixels)]
    return Network.from_parts(out, pixels)


def const_model(net, per_cell, steps=24, step_minutes=60, **kw):
    samples = np.repeat(np.asarray(per_cell, dtype=float)[:, None], steps, axis=1)
    return DemandModel(DemandTrace(step_minutes, samples), **kw)


@pytest.fixture
def two_by_two():
    """E cell on pixels 0,1 and an 1800 MHz cell on pixel 1."""
    return make_net([(E, 100.0, 0.5, {0: 4.0, 1: 2.0}),
                     (T, 200.0, 0.25, {1: 9.0})], 2)


@pytest.fixture
def tiny_line():
    """One station: E cell covering 4 pixels plus three capacity cells."""
    return make_net([
        (E, 100.0, 0.0, {0: 4.0, 1: 4.0, 2: 4.0, 3: 4.0}, 0),
        (T, 50.0, 0.0, {0: 8.0, 1: 8.0}, 0),
        (A, 60.0, 0.0, {1: 8.0, 2: 8.0}, 0),
        (T, 40.0, 0.0, {2: 8.0, 3: 8.0}, 0),
    ], 4)


dyadic = st.integers(1, 64).map(lambda v: v / 4)


@st.composite
def small_networks(draw, max_cells=5, max_pixels=6, max_controllable=None, dyadic_only=False):
    """Random valid networks; cell 0 is an E cell covering every pixel."""
    n_pixels = draw(st.integers(1, max_pixels))
    n_cells = draw(st.integers(1, max_cells))
    value = dyadic if dyadic_only else st.floats(0.1, 20.0, allow_nan=False)
    power = st.integers(0, 200).map(float) if dyadic_only else st.floats(0.0, 200.0)
    cost = dyadic.map(lambda v: v / 16) if dyadic_only else st.floats(0.0, 1.0)
    cells = [(E, draw(power), draw(cost), {p: draw(value) for p in range(n_pixels)})]
    n_cap = 0
    for _ in range(1, n_cells):
        capacity = max_controllable is None or n_cap < max_controllable
        layer = draw(st.sampled_from([E, T, A])) if capacity else E
        n_cap += layer is not E
        covered = draw(st.sets(st.integers(0, n_pixels - 1), max_size=n_pixels))
        cells.append((layer, draw(power), draw(cost), {p: draw(value) for p in sorted(covered)}))
    return make_net(cells, n_pixels)
