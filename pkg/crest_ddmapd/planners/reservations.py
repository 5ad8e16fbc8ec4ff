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

from bisect import bisect_right
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from crest_ddmapd.envs.warehouse import Cell
from crest_ddmapd.utils.errors import InvariantViolation

INF = math.inf

Interval = Tuple[int, float] # inclusive, end may be INF

def merge_intervals(intervals: Iterable[Interval]) -> List[Interval]:

    merged: List[List] = []

    for a, b in sorted(intervals):

        if merged and a <= merged[-1][1] + 1:

            merged[-1][1] = max(merged[-1][1], b)

        else:

            merged.append([a, b])

    return [(a, b) for a, b in merged]

def complement(occupied: Sequence[Interval]) -> List[Interval]:

    # maximal free intervals in [0, INF) given merged occupied intervals

    free: List[Interval] = []

    t = 0

    for a, b in occupied:

        if a > t:

            free.append((t, a - 1))

        t = b + 1

        if t == INF:

            return free

    free.append((t, INF))

    return free

def interval_at(intervals: Sequence[Interval], t: float) -> Optional[int]:

    # index of the interval containing t

    i = bisect_right(intervals, (t, INF)) - 1

    if i >= 0 and intervals[i][0] <= t <= intervals[i][1]:

        return i

    return None

class ReservationLayer:

    """ Timed cell and edge occupancies, grouped by owner so they can be replaced or excluded. """

    def __init__(self):

        self._cells: Dict[Cell, Dict[Hashable, List[Interval]]] = {}
        self._edges: Dict[Tuple[Cell, Cell, int], Set[Hashable]] = {}

        self._owner_cells: Dict[Hashable, Set[Cell]] = {}
        self._owner_edges: Dict[Hashable, List[Tuple[Cell, Cell, int]]] = {}

        self._horizon = 0

    @property
    def horizon(self) -> int:

        # one past the latest finite reservation

        return self._horizon

    def owners(self) -> List[Hashable]:

        return list(self._owner_cells.keys())

    def clear(self, owner: Hashable):

        for cell in self._owner_cells.pop(owner, ()):

            per_owner = self._cells.get(cell)

            if per_owner is not None:

                per_owner.pop(owner, None)

                if not per_owner:

                    del self._cells[cell]

        for key in self._owner_edges.pop(owner, ()):

            holders = self._edges.get(key)

            if holders is not None:

                holders.discard(owner)

                if not holders:

                    del self._edges[key]

    def set_path(self, 
            owner: Hashable, 
            path: Sequence[Cell], 
            t0: int = 0, 
            hold: bool = True,
            margin: int = 0):

        """
        Replaces the reservations of owner with a timed path.

        Parameters:
            owner: reservation key
            path (Sequence[Cell]): cell at times t0, t0+1, ...
            t0 (int): time of the first entry
            hold (bool): the last cell stays reserved forever
            margin (int): widen every occupancy by this many steps on both sides
        """

        self.clear(owner)

        if not path:

            return

        cells = self._owner_cells.setdefault(owner, set())
        edges = self._owner_edges.setdefault(owner, [])

        start = t0

        for i in range(1, len(path) + 1):

            if i == len(path) or path[i] != path[start - t0]:

                cell = path[start - t0]
                end = t0 + i - 1

                if i == len(path) and hold:

                    end = INF

                lo = max(0, start - margin)
                hi = end + margin

                self._cells.setdefault(cell, {}).setdefault(owner, []).append((lo, hi))
                cells.add(cell)

                if hi != INF:

                    self._horizon = max(self._horizon, int(hi) + 1)

                if i < len(path):

                    key = (cell, path[i], t0 + i)
                    self._edges.setdefault(key, set()).add(owner)
                    edges.append(key)

                start = t0 + i

        if not hold:

            self._horizon = max(self._horizon, t0 + len(path))

    def occupied(self, 
            cell: Cell, 
            exclude: Iterable[Hashable] = ()) -> List[Interval]:

        per_owner = self._cells.get(cell)

        if not per_owner:

            return []

        excluded = set(exclude)

        return merge_intervals(iv for owner, ivs in per_owner.items() 
                    if owner not in excluded for iv in ivs)

    def safe_intervals(self, 
            cell: Cell, 
            exclude: Iterable[Hashable] = ()) -> List[Interval]:

        return complement(self.occupied(cell, exclude))

    def swap_blocked(self, 
            u: Cell, 
            v: Cell, 
            t: int, 
            exclude: Iterable[Hashable] = ()) -> bool:

        # a move u -> v arriving at t collides with anyone moving v -> u arriving at t

        holders = self._edges.get((v, u, t))

        if not holders:

            return False

        return bool(holders - set(exclude))

    def free_at(self, 
            cell: Cell, 
            t: int, 
            exclude: Iterable[Hashable] = ()) -> bool:

        return interval_at(self.safe_intervals(cell, exclude), t) is not None

class ReservationTable:

    """ Agent layer (agent paths and dummy segments) plus shelf layer (shelf paths). """

    def __init__(self):

        self.agents = ReservationLayer()
        self.shelves = ReservationLayer()

    @staticmethod
    def path_key(agent: int):

        return ("pi", agent)

    @staticmethod
    def dummy_key(agent: int):

        return ("dummy", agent)

    @staticmethod
    def shelf_key(shelf: int):

        return ("shelf", shelf)

    def agent_keys(self, agent: int):

        return (self.path_key(agent), self.dummy_key(agent))

    def reserve_agent(self, 
            agent: int, 
            path: Sequence[Cell], 
            dummy: Sequence[Cell]):

        """ Reserves pi_a from t=0 and the dummy starting at its end (the dummy end is held). """

        if dummy and dummy[0] != path[-1]:

            raise InvariantViolation(f"dummy of agent {agent} does not start at its path end")

        self.agents.set_path(self.path_key(agent), path, 0, hold=not dummy)
        self.agents.set_path(self.dummy_key(agent), dummy, len(path) - 1, hold=True)

    def drop_dummy(self, agent: int):

        self.agents.clear(self.dummy_key(agent))

    def reserve_shelf(self, 
            shelf: int, 
            cells: Sequence[Cell]):

        self.shelves.set_path(self.shelf_key(shelf), cells, 0, hold=True)

    @property
    def horizon(self) -> int:

        return max(self.agents.horizon, self.shelves.horizon)

def build_reservations(agent_paths: Sequence[Sequence[Cell]],
        dummies: Sequence[Sequence[Cell]],
        shelf_paths: Sequence[Sequence[Cell]]) -> ReservationTable:

    """
    Builds the two-layer reservation table of an execution state.

    Parameters:
        agent_paths: committed pi_a, entry t is the cell at time t
        dummies: live dummy segment of each agent, starting at the end of pi_a
            (an empty segment holds the end of pi_a forever)
        shelf_paths: committed phi_s cells, held at their last cell forever
    Returns:
        table (ReservationTable)
    """

    table = ReservationTable()

    for a, path in enumerate(agent_paths):

        table.reserve_agent(a, path, dummies[a] if a < len(dummies) else ())

    for s, cells in enumerate(shelf_paths):

        table.reserve_shelf(s, cells)

    return table
