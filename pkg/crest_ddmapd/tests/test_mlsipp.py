# Copyright (C) 2023  Andrea Patrizi (AndrePatri, andreapatrizi1b6e6@gmail.com)
# 
# This file is part of CrestDDMAPD and distributed under the General Public License version 2 license.
# 
# CrestDDMAPD is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 2 of the License, or
# (at your option) any later version.
# 
# CrestDDMAPD is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
# 
# You should have received a copy of the GNU General Public License
# along with CrestDDMAPD.  If not, see <http://www.gnu.org/licenses/>.
# 
import math

import numpy as np
import pytest

from crest_ddmapd.envs.warehouse import DistanceOracle
from crest_ddmapd.planners.mlsipp import CarryQuery, plan_carry
from crest_ddmapd.planners.reservations import ReservationTable
from crest_ddmapd.utils.errors import PlannerFailure

from crest_ddmapd.tests.conftest import scaled

INF = math.inf

def _query(start, segment, earliest=None, lift_earliest=0, overhead=0, forward_only=False, 
        home=None, t_start=0, agent=0, shelf=0):

    return CarryQuery(agent=agent,
                start=start,
                t_start=t_start,
                home=start if home is None else home,
                shelf=shelf,
                segment=tuple(segment),
                first_index=0,
                earliest=tuple(earliest if earliest is not None else [0] * len(segment)),
                lift_earliest=lift_earliest,
                overhead=overhead,
                allow_wait=not forward_only,
                allow_backward=not forward_only)

def _plan(grid, res, q):

    return plan_carry(q, res, grid, DistanceOracle(grid))

SEGMENT = [(2, 0), (2, 1), (2, 2)]

def test_straight_carry(open_grid):

    grid = open_grid(5, 5)

    carry = _plan(grid, ReservationTable(), _query((0, 0), SEGMENT))

    assert carry.lift_time == 2
    assert carry.place_time == 4
    assert carry.path == [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]
    assert carry.shelf_steps == [((2, 0), 0), ((2, 1), 1), ((2, 2), 2)]
    assert carry.dummy[0] == (2, 2) and carry.dummy[-1] == (0, 0)
    assert len(carry.dummy) == 5

def test_overhead_occupies_lift_and_place(open_grid):

    grid = open_grid(5, 5)

    carry = _plan(grid, ReservationTable(), _query((0, 0), SEGMENT, overhead=1))

    assert (carry.lift_time, carry.place_time) == (2, 5)
    assert carry.path[2:4] == [(2, 0), (2, 0)]
    assert carry.path[5:] == [(2, 2), (2, 2)]
    assert carry.t_end == 6

@pytest.mark.parametrize("forward_only", [False, True])
def test_earliest_arrival_is_honored(open_grid, forward_only):

    grid = open_grid(5, 5)

    carry = _plan(grid, ReservationTable(), 
                _query((0, 0), SEGMENT, earliest=[0, 0, 7], forward_only=forward_only))

    assert carry.place_time == 7

    if forward_only:

        # no waits while lifted: the lift itself is delayed
        assert carry.lift_time == 5

def test_lift_earliest(open_grid):

    grid = open_grid(5, 5)

    carry = _plan(grid, ReservationTable(), _query((0, 0), SEGMENT, lift_earliest=6))

    assert carry.lift_time == 6
    assert carry.place_time == 8

def test_empty_segment_fails(open_grid):

    with pytest.raises(PlannerFailure):

        _plan(open_grid(3, 3), ReservationTable(), _query((0, 0), [(1, 1)]))

def test_delivery_held_by_another_shelf_fails(open_grid):

    res = ReservationTable()
    res.reserve_shelf(1, [(2, 2)])

    with pytest.raises(PlannerFailure):

        _plan(open_grid(5, 5), res, _query((0, 0), SEGMENT))

def test_own_reservations_are_ignored(open_grid):

    res = ReservationTable()
    res.reserve_agent(0, [(0, 0)], [(0, 0)])
    res.reserve_shelf(0, [(2, 0)])

    carry = _plan(open_grid(5, 5), res, _query((0, 0), SEGMENT))

    assert carry.place_time == 4

def test_carry_avoids_committed_agent(open_grid):

    grid = open_grid(5, 5)

    res = ReservationTable()

    # another agent parks on (2,1) until t=5, then leaves for good
    res.reserve_agent(1, [(2, 1)] * 6 + [(3, 1)], [])

    carry = _plan(grid, res, _query((0, 0), SEGMENT))

    assert carry.place_time == 7

    for t, (cell, _) in enumerate(carry.shelf_steps, start=carry.lift_time):

        assert res.agents.free_at(cell, t)

# brute-force time-expanded oracle

def _oracle(grid, res, q):

    excl_a = res.agent_keys(q.agent)
    excl_s = (res.shelf_key(q.shelf),)

    def agent_free(c, t):

        return res.agents.free_at(c, t, excl_a)

    def carry_free(c, t):

        return agent_free(c, t) and res.shelves.free_at(c, t, excl_s)

    def agent_swap(u, v, t):

        return res.agents.swap_blocked(u, v, t, excl_a)

    def carry_swap(u, v, t):

        return agent_swap(u, v, t) or res.shelves.swap_blocked(u, v, t, excl_s)

    def steps(c):

        return [c] + list(grid.neighbors(c))

    horizon = (res.horizon + q.lift_earliest + max(q.earliest) 
            + 4 * grid.n_cells + 2 * q.L + 2 * q.overhead + 10)

    def home_reachable(c, t0):

        frontier = {c}

        for t in range(t0, t0 + horizon):

            for cell in frontier:

                if cell == q.home:

                    ivs = res.agents.safe_intervals(cell, excl_a)
                    i = next((i for i, iv in enumerate(ivs) if iv[0] <= t <= iv[1]), None)

                    if i is not None and ivs[i][1] == INF:

                        return True

            frontier = {n for c in frontier for n in steps(c) 
                if agent_free(n, t + 1) and (n == c or not agent_swap(c, n, t + 1))}

            if not frontier:

                return False

        return False

    if not agent_free(q.start, q.t_start):

        return None

    seg, L, d = q.segment, q.L, q.overhead

    travel = {q.start}
    carried = {}

    for t in range(q.t_start, horizon):

        if t >= q.lift_earliest and seg[0] in travel:

            if all(agent_free(seg[0], x) for x in range(t, t + d + 1)) and carry_free(seg[0], t + d):

                carried.setdefault(t + d, set()).add(0)

        here = carried.get(t, set())

        if L in here:

            occ = res.shelves.occupied(seg[L], excl_s)

            if (all(b < t for _, b in occ) 
                and all(agent_free(seg[L], x) for x in range(t, t + d + 1))
                and home_reachable(seg[L], t + d)):

                return t

        travel = {n for c in travel for n in steps(c) 
            if agent_free(n, t + 1) and (n == c or not agent_swap(c, n, t + 1))}

        nxt = carried.setdefault(t + 1, set())

        for k in here:

            moves = []

            if q.allow_wait:

                moves.append(k)

            if k < L and t + 1 >= q.earliest[k + 1]:

                moves.append(k + 1)

            if q.allow_backward and k > 0:

                moves.append(k - 1)

            for m in moves:

                if carry_free(seg[m], t + 1) and (m == k or not carry_swap(seg[k], seg[m], t + 1)):

                    nxt.add(m)

    return None

def _random_walk(rng, grid, start, length, avoid=()):

    path = [start]

    for _ in range(length):

        options = [c for c in [path[-1]] + list(grid.neighbors(path[-1])) if c not in avoid]

        path.append(options[int(rng.integers(len(options)))])

    return path

def _simple_segment(rng, grid, start, length):

    seg = [start]

    for _ in range(length):

        options = [c for c in grid.neighbors(seg[-1]) if c not in seg]

        if not options:

            break

        seg.append(options[int(rng.integers(len(options)))])

    return seg

def _random_query(rng, open_grid):

    size = int(rng.integers(4, 9))
    walls = [tuple(int(x) for x in rng.integers(0, size, 2)) for _ in range(int(rng.integers(0, size)))]

    grid = open_grid(size, size, walls=walls)

    free = grid.free_cells()
    order = rng.permutation(len(free))

    start, seg0 = free[order[0]], free[order[1]]

    segment = _simple_segment(rng, grid, seg0, int(rng.integers(1, 5)))

    if len(segment) < 2:

        return None

    res = ReservationTable()

    for i in range(int(rng.integers(0, 4))):

        path = _random_walk(rng, grid, free[order[2 + i]], int(rng.integers(0, 12)))

        res.reserve_agent(1 + i, path, [])

    shelf_starts = [c for c in (free[i] for i in order[6:9]) if c not in segment]

    for i, cell in enumerate(shelf_starts[:int(rng.integers(0, 3))]):

        path = _random_walk(rng, grid, cell, int(rng.integers(0, 12)), avoid=segment)

        res.reserve_shelf(1 + i, path)

    overhead = int(rng.integers(0, 2))
    forward_only = bool(rng.integers(0, 2))
    earliest = [0] + [int(rng.integers(0, 10)) for _ in segment[1:]]

    q = _query(start, segment, earliest=earliest, lift_earliest=int(rng.integers(0, 6)),
            overhead=overhead, forward_only=forward_only)

    return grid, res, q

def test_arrival_matches_time_expanded_search(open_grid):

    rng = np.random.default_rng(11)

    checked = 0

    while checked < scaled(200):

        case = _random_query(rng, open_grid)

        if case is None:

            continue

        grid, res, q = case

        if len(grid.free_cells()) < 9:

            continue

        expected = _oracle(grid, res, q)

        if expected is None:

            with pytest.raises(PlannerFailure):

                _plan(grid, res, q)

        else:

            carry = _plan(grid, res, q)

            assert carry.place_time == expected

            assert carry.path[0] == q.start
            assert carry.shelf_steps[-1][0] == q.segment[-1]
            assert carry.dummy[-1] == q.home
            assert carry.lift_time >= q.lift_earliest

        checked += 1
