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
import heapq
import itertools

from typing import Callable, Collection, Dict, List, Optional, Sequence, Tuple

from crest_ddmapd.envs.warehouse import Cell, DistanceOracle, GridMap
from crest_ddmapd.planners.reservations import INF, Interval, interval_at

IntervalsFn = Callable[[Cell], Sequence[Interval]]
SwapFn = Callable[[Cell, Cell, int], bool]

def fill_waits(points: Sequence[Tuple[Cell, int]]) -> List[Cell]:

    """ Expands (cell, arrival time) points into one cell per timestep. """

    path = [points[0][0]]

    for (prev, _), (cell, t) in zip(points, points[1:]):

        while len(path) < t - points[0][1]:

            path.append(prev)

        path.append(cell)

    return path

def arrival_window(t: int, 
        current_end: float, 
        target: Interval,
        earliest: float = 0) -> Optional[Tuple[int, float]]:

    # earliest/latest arrival in target when departing no earlier than t and no later than current_end

    lo = max(t + 1, target[0], earliest)
    hi = min(current_end + 1, target[1])

    if lo > hi:

        return None

    return int(lo), hi

def sipp_search(grid: GridMap,
        oracle: DistanceOracle,
        start: Cell,
        t0: int,
        goal: Cell,
        intervals: IntervalsFn,
        swap_blocked: SwapFn,
        forbidden: Collection[Cell] = (),
        max_time: float = INF) -> Optional[List[Cell]]:

    """
    Safe interval path planning for one entity.

    Parameters:
        grid (GridMap): the grid
        oracle (DistanceOracle): heuristic source
        start (Cell): initial cell, occupied at t0
        t0 (int): start time
        goal (Cell): must be reached in a safe interval that never ends
        intervals (Callable): safe intervals of a cell
        swap_blocked (Callable): whether the move (u, v) arriving at t is an edge conflict
        forbidden (Collection[Cell]): cells never entered
        max_time (float): arrivals after this time are discarded
    Returns:
        path (List[Cell]): cell per timestep from t0 to the goal arrival, None if none exists
    """

    cache: Dict[Cell, Sequence[Interval]] = {}

    def ivs(cell):

        if cell not in cache:

            cache[cell] = intervals(cell)

        return cache[cell]

    i0 = interval_at(ivs(start), t0)

    if i0 is None:

        return None

    counter = itertools.count()

    best: Dict[Tuple[Cell, int], int] = {(start, i0): t0}
    parents: Dict[Tuple[Cell, int, int], Optional[Tuple[Cell, int, int]]] = {(start, i0, t0): None}

    heap = [(t0 + oracle.dist(start, goal), t0, start, next(counter), i0)]

    while heap:

        _, t, cell, _, i = heapq.heappop(heap)

        if best.get((cell, i), INF) < t:

            continue

        current_end = ivs(cell)[i][1]

        if cell == goal and current_end == INF:

            points = []
            key = (cell, i, t)

            while key is not None:

                points.append((key[0], key[2]))
                key = parents[key]

            return fill_waits(points[::-1])

        for nxt in grid.neighbors(cell):

            if nxt in forbidden:

                continue

            h = oracle.dist(nxt, goal)

            if h == INF:

                continue

            for j, target in enumerate(ivs(nxt)):

                if target[0] > current_end + 1:

                    break

                window = arrival_window(t, current_end, target)

                if window is None:

                    continue

                arrive, latest = window

                while arrive <= latest and swap_blocked(cell, nxt, arrive):

                    arrive += 1

                if arrive > latest or arrive > max_time:

                    continue

                if best.get((nxt, j), INF) <= arrive:

                    continue

                best[(nxt, j)] = arrive
                parents[(nxt, j, arrive)] = (cell, i, t)

                heapq.heappush(heap, (arrive + h, arrive, nxt, next(counter), j))

    return None
