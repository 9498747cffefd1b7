import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellsleep.reward import (RewardBreakdown, RewardParams, cell_energy, pixel_penalty,
                              step_reward)
from cellsleep.network import Cell

from conftest import E, T, make_net, small_networks

P = RewardParams()


@pytest.mark.parametrize("contribution, demand, expected", [
    (5.0, 3.0, 0.0),
    (3.0, 3.0, 1000.0),   # equality is not covered
    (0.0, 0.0, 1000.0),   # regression: zero-demand pixels still need capacity
    (2.0, 3.0, 1000.0),
])
def test_pixel_penalty(contribution, demand, expected):
    assert pixel_penalty(contribution, demand, P) == expected


def test_penalty_is_configurable():
    assert pixel_penalty(0, 1, RewardParams(penalty_per_pixel=7.5)) == 7.5


def test_cell_energy():
    cell = Cell(0, 0, T, 100.0, 0.5, {0: 1.0})
    assert cell_energy(cell, False, 500.0, 1.0) == 0.0
    assert cell_energy(cell, True, 20.0, 1.0) == 110.0
    assert cell_energy(cell, True, 0.0, 0.5) == 50.0


@pytest.mark.parametrize("kw", [dict(penalty_per_pixel=0), dict(step_hours=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        RewardParams(**kw)


def test_all_off_zero_demand(two_by_two):
    params = RewardParams(step_hours=0.25)
    e, p = step_reward(two_by_two, [False, False], [0.0, 0.0], [0.0, 0.0], params)
    assert (e, p) == (0.0, 2 * 1000 * 0.25)


def test_single_cell_covered():
    net = make_net([(E, 100.0, 0.0, {0: 5.0})], 1)
    assert step_reward(net, [True], [1.0], [0.0], P) == (100.0, 0.0)


def test_size_mismatch(two_by_two):
    with pytest.raises(ValueError):
        step_reward(two_by_two, [True], [0, 0], [0, 0], P)
    with pytest.raises(ValueError):
        step_reward(two_by_two, [True, True], [0], [0, 0], P)


# Hand-computed against the definition. Cell 0 (E): base 100, 0.5/Mb,
# capacity 4 on p0 and 2 on p1. Cell 1 (T): base 200, 0.25/Mb, capacity 9
# on p1. Cell demand is spread uniformly: cell 0 over 2 pixels, cell 1 over 1.
HAND_TABLES = {
    # cell demands (8, 6): pixel demands p0 = 4, p1 = 4 + 6 = 10
    (8.0, 6.0): {
        (0, 0): (0.0, 2000.0),
        (1, 0): (104.0, 2000.0),      # p0: 4 - 4 = 0 is not > 0
        (0, 1): (201.5, 2000.0),      # p1: 9 < 10
        (1, 1): (305.5, 1000.0),      # p1: 11 > 10, p0 still at equality
    },
    # cell demands (6, 6): p0 = 3, p1 = 3 + 6 = 9
    (6.0, 6.0): {
        (0, 0): (0.0, 2000.0),
        (1, 0): (103.0, 1000.0),
        (0, 1): (201.5, 2000.0),      # p1: 9 - 9 = 0 is not > 0
        (1, 1): (304.5, 0.0),
    },
}


@pytest.mark.parametrize("cell_demand", list(HAND_TABLES))
def test_two_by_two_table(two_by_two, cell_demand):
    d0, d1 = cell_demand
    pixel_demands = [d0 / 2, d0 / 2 + d1]
    for action, (energy, penalty) in HAND_TABLES[cell_demand].items():
        carried = [d0, d1]
        e, p = step_reward(two_by_two, list(map(bool, action)), pixel_demands, carried, P)
        assert abs(e - energy) <= 1e-12 and abs(p - penalty) <= 1e-12, action


@settings(max_examples=60, deadline=None)
@given(small_networks(), st.data())
def test_penalty_monotone_energy_additive(net, data):
    on = np.array(data.draw(st.lists(st.booleans(), min_size=net.n_cells, max_size=net.n_cells)))
    demands = data.draw(st.lists(st.floats(0, 30), min_size=net.n_pixels, max_size=net.n_pixels))
    carried = data.draw(st.lists(st.floats(0, 100), min_size=net.n_cells, max_size=net.n_cells))
    e, p = step_reward(net, on, demands, carried, P)
    for c in np.flatnonzero(~on):
        more = on.copy()
        more[c] = True
        assert step_reward(net, more, demands, carried, P)[1] <= p
    expected = sum(cell_energy(net.cells[c], True, carried[c], 1.0) for c in np.flatnonzero(on))
    assert e == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_breakdown_accumulates():
    b = RewardBreakdown(per_step=[])
    b.add(0, 1.5, 0.0)
    b.add(1, 2.25, 1000.0)
    assert (b.energy, b.penalty, b.reward) == (3.75, 1000.0, 1003.75)
    assert b.per_step == [(0, 1.5, 0.0), (1, 2.25, 1000.0)]
