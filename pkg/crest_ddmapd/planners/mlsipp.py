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

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.warehouse import Cell, DistanceOracle, GridMap
from crest_ddmapd.planners.reservations import (INF, Interval, ReservationTable, 
                                                complement, interval_at, merge_intervals)
from crest_ddmapd.planners.sipp import arrival_window
from crest_ddmapd.utils.errors import PlannerFailure

TRAVEL = 0 # to s.current, beneath shelves
CARRY = 1 # along the segment, both layers
RETURN = 2 # dummy segment home, beneath shelves

@dataclass(frozen=True)
class CarryQuery:

    """ One agent-shelf planning request.

    segment holds the simplified waypoints s.current .. s.new; earliest[j] is the
    first timestep the shelf may reach segment[j] (Type-2 predecessors already passed).
    """

    agent: int
    start: Cell
    t_start: int
    home: Cell
    shelf: int
    segment: Tuple[Cell, ...]
    first_index: int
    earliest: Tuple[float, ...]
    lift_earliest: int
    overhead: int = 0
    allow_wait: bool = True
    allow_backward: bool = True

    @property
    def L(self) -> int:

        return len(self.segment) - 1

@dataclass
class PlannedCarry:

    agent: int
    shelf: int
    t_start: int
    lift_time: int
    place_time: int
    path: List[Cell] # t_start .. place_time + overhead
    dummy: List[Cell] # starts at the end of path
    shelf_steps: List[Tuple[Cell, int]] # lift_time .. end, (cell, trajectory index)
    expanded: int = 0

    @property
    def t_end(self) -> int:

        return self.t_start + len(self.path) - 1

    @property
    def arrival(self) -> int:

        return self.place_time

class _Node:

    __slots__ = ("label", "pos", "interval", "t", "t_place", "parent", "points")

    def __init__(self, label, pos, interval, t, t_place, parent, points):

        self.label = label
        self.pos = pos # cell for TRAVEL/RETURN, segment index for CARRY
        self.interval = interval
        self.t = t
        self.t_place = t_place
        self.parent = parent
        self.points = points # (t, cell, label, segment index) reached since the parent

class MultiLabelPlanner:

    """ A* over (label, position, safe interval) for the travel-carry-return sequence.

    Args:
        grid (GridMap): the warehouse grid
        oracle (DistanceOracle): distance heuristic
        res (ReservationTable): reservations of everything already committed
        verbose (bool): log expanded node counts per query
    """

    def __init__(self, 
            grid: GridMap, 
            oracle: DistanceOracle, 
            res: ReservationTable,
            verbose: bool = False):

        self._grid = grid
        self._oracle = oracle
        self._res = res
        self._verbose = verbose

    def _setup(self, q: CarryQuery):

        self._q = q
        self._agent_excl = self._res.agent_keys(q.agent)
        self._shelf_excl = (self._res.shelf_key(q.shelf),)
        self._agent_ivs: Dict[Cell, List[Interval]] = {}
        self._carry_ivs: Dict[Cell, List[Interval]] = {}
        self._shelf_occ: Dict[Cell, List[Interval]] = {}

        self._to_new = self._oracle.dist(q.segment[-1], q.home)

    def _agent_intervals(self, cell: Cell) -> List[Interval]:

        if cell not in self._agent_ivs:

            self._agent_ivs[cell] = self._res.agents.safe_intervals(cell, self._agent_excl)

        return self._agent_ivs[cell]

    def _shelf_occupied(self, cell: Cell) -> List[Interval]:

        if cell not in self._shelf_occ:

            self._shelf_occ[cell] = self._res.shelves.occupied(cell, self._shelf_excl)

        return self._shelf_occ[cell]

    def _carry_intervals(self, cell: Cell) -> List[Interval]:

        if cell not in self._carry_ivs:

            occ = merge_intervals(self._res.agents.occupied(cell, self._agent_excl) 
                        + self._shelf_occupied(cell))

            self._carry_ivs[cell] = complement(occ)

        return self._carry_ivs[cell]

    def _agent_swap(self, u: Cell, v: Cell, t: int) -> bool:

        return self._res.agents.swap_blocked(u, v, t, self._agent_excl)

    def _carry_swap(self, u: Cell, v: Cell, t: int) -> bool:

        return (self._res.agents.swap_blocked(u, v, t, self._agent_excl) 
            or self._res.shelves.swap_blocked(u, v, t, self._shelf_excl))

    def _shelf_free_from(self, cell: Cell, t: int) -> bool:

        occ = self._shelf_occupied(cell)

        return not occ or occ[-1][1] < t

    def _keys(self, node: _Node):

        q = self._q

        if node.label == RETURN:

            primary = node.t_place
            secondary = node.t + self._oracle.dist(self._grid_cell(node), q.home)

        else:

            if node.label == TRAVEL:

                reach = max(node.t + self._oracle.dist(node.pos, q.segment[0]), q.lift_earliest)
                primary = reach + q.overhead + q.L

            else:

                primary = node.t + q.L - node.pos

            secondary = primary + q.overhead + self._to_new

        return primary, secondary

    def _grid_cell(self, node: _Node) -> Cell:

        return self._q.segment[node.pos] if node.label == CARRY else node.pos

    def plan(self, q: CarryQuery) -> PlannedCarry:

        """
        Plans travel to s.current, lift, carry up to s.new, place and the dummy return.

        Minimizes the arrival time at s.new, then the end of the dummy segment.
        Raises PlannerFailure when the reservations leave no feasible path.
        """

        if q.L < 1:

            raise PlannerFailure(f"empty carry segment for shelf {q.shelf}")

        self._setup(q)

        start_ivs = self._agent_intervals(q.start)
        i0 = interval_at(start_ivs, q.t_start)

        if i0 is None:

            raise PlannerFailure(f"agent {q.agent} start {q.start} is reserved at t={q.t_start}")

        counter = itertools.count()

        best: Dict[tuple, int] = {}
        heap = []

        def push(node: _Node, waits: int = 0):

            key = (node.label, node.pos, node.interval)

            if best.get(key, INF) <= node.t:

                return

            best[key] = node.t

            primary, secondary = self._keys(node)

            heapq.heappush(heap, (primary, secondary, node.t, waits, self._grid_cell(node), 
                            next(counter), node))

        push(_Node(TRAVEL, q.start, i0, q.t_start, None, None, [(q.t_start, q.start, TRAVEL, None)]))

        expanded = 0

        while heap:

            *_, node = heapq.heappop(heap)

            if best.get((node.label, node.pos, node.interval), INF) < node.t:

                continue

            expanded += 1

            if node.label == RETURN:

                if node.pos == q.home and self._agent_intervals(node.pos)[node.interval][1] == INF:

                    carry = self._reconstruct(node, expanded)

                    if self._verbose:

                        Journal.log(self.__class__.__name__,
                            "plan",
                            f"agent {q.agent} shelf {q.shelf}: arrival {carry.place_time}, {expanded} expansions",
                            LogType.STAT)

                    return carry

                self._expand_grid(node, push, RETURN)

            elif node.label == TRAVEL:

                if node.pos == q.segment[0]:

                    if q.allow_wait or q.allow_backward:

                        self._lift(node, push)

                    else:

                        self._forward_chains(node, push)

                self._expand_grid(node, push, TRAVEL)

            else:

                self._expand_carry(node, push)

        raise PlannerFailure(f"no path for agent {q.agent} carrying shelf {q.shelf} "
                            f"({expanded} expansions)")

    def _expand_grid(self, node: _Node, push, label: int):

        cell = node.pos
        current_end = self._agent_intervals(cell)[node.interval][1]

        for nxt in self._grid.neighbors(cell):

            for j, target in enumerate(self._agent_intervals(nxt)):

                if target[0] > current_end + 1:

                    break

                window = arrival_window(node.t, current_end, target)

                if window is None:

                    continue

                arrive, latest = window

                while arrive <= latest and self._agent_swap(cell, nxt, arrive):

                    arrive += 1

                if arrive > latest:

                    continue

                push(_Node(label, nxt, j, arrive, node.t_place, node, 
                        [(arrive, nxt, label, None)]))

    def _lift(self, node: _Node, push):

        q = self._q

        cell = q.segment[0]
        current_end = self._agent_intervals(cell)[node.interval][1]

        tau = max(node.t, q.lift_earliest)
        ready = tau + q.overhead

        if ready > current_end:

            return

        j = interval_at(self._carry_intervals(cell), ready)

        if j is None:

            return

        push(_Node(CARRY, 0, j, ready, None, node, 
                [(tau, cell, CARRY, 0), (ready, cell, CARRY, 0)]))

    def _expand_carry(self, node: _Node, push):

        q = self._q

        cell = q.segment[node.pos]
        current_end = self._carry_intervals(cell)[node.interval][1]

        if node.pos == q.L:

            self._place(node, push)

        moves = [node.pos + 1] if node.pos < q.L else []

        if q.allow_backward and node.pos > 0:

            moves.append(node.pos - 1)

        for k in moves:

            nxt = q.segment[k]
            earliest = q.earliest[k] if k > node.pos else 0

            if earliest == INF:

                continue

            if not q.allow_wait:

                current_end = min(current_end, node.t)

            for j, target in enumerate(self._carry_intervals(nxt)):

                if target[0] > current_end + 1:

                    break

                window = arrival_window(node.t, current_end, target, earliest)

                if window is None:

                    continue

                arrive, latest = window

                while arrive <= latest and self._carry_swap(cell, nxt, arrive):

                    arrive += 1

                if arrive > latest:

                    continue

                push(_Node(CARRY, k, j, arrive, None, node, [(arrive, nxt, CARRY, k)]),
                    waits=arrive - node.t - 1)

    def _place(self, node: _Node, push):

        q = self._q

        cell = q.segment[q.L]
        t_place = node.t
        done = t_place + q.overhead

        if not self._shelf_free_from(cell, t_place):

            return

        ivs = self._agent_intervals(cell)
        i = interval_at(ivs, t_place)

        if i is None or ivs[i][1] < done:

            return

        push(_Node(RETURN, cell, i, done, t_place, node, [(done, cell, RETURN, q.L)]))

    def _forward_chains(self, node: _Node, push):

        # baseline mode: lift at some tau, then one waypoint per step with no waits

        q = self._q

        cell = q.segment[0]
        current_end = self._agent_intervals(cell)[node.interval][1]

        # past the horizon and the latest finite earliest arrival, every tau behaves alike
        latest = max((e for e in q.earliest if e != INF), default=0)

        bound = max(self._res.horizon, node.t, q.lift_earliest, latest) + q.L + q.overhead + 2

        tau = max(node.t, q.lift_earliest)

        while tau + q.overhead <= min(current_end, bound):

            ready = tau + q.overhead

            if interval_at(self._carry_intervals(cell), ready) is not None:

                points = self._chain_from(ready)

                if points is not None:

                    t_place = ready + q.L
                    done = t_place + q.overhead

                    ivs = self._agent_intervals(q.segment[-1])
                    i = interval_at(ivs, t_place)

                    if (i is not None and ivs[i][1] >= done 
                        and self._shelf_free_from(q.segment[-1], t_place)):

                        push(_Node(RETURN, q.segment[-1], i, done, t_place, node,
                                [(tau, cell, CARRY, 0), (ready, cell, CARRY, 0)] + points 
                                + [(done, q.segment[-1], RETURN, q.L)]))

            tau += 1

    def _chain_from(self, ready: int) -> Optional[list]:

        q = self._q

        points = []

        for k in range(1, q.L + 1):

            t = ready + k
            nxt = q.segment[k]

            if t < q.earliest[k]:

                return None

            if interval_at(self._carry_intervals(nxt), t) is None:

                return None

            if self._carry_swap(q.segment[k - 1], nxt, t):

                return None

            points.append((t, nxt, CARRY, k))

        return points

    def _reconstruct(self, goal: _Node, expanded: int) -> PlannedCarry:

        q = self._q

        points = []
        node = goal

        while node is not None:

            points.extend(reversed(node.points))
            node = node.parent

        points.reverse()

        # the dummy segment starts once the place is over
        split = next(i for i, p in enumerate(points) if p[2] == RETURN)

        lift_time = next(p[0] for p in points if p[2] == CARRY)
        t_end = points[split][0]

        path: List[Cell] = []
        shelf_idx: List[int] = []

        cur_cell, cur_k = q.start, None

        for t in range(q.t_start, t_end + 1):

            for p in points[:split + 1]:

                if p[0] == t:

                    cur_cell, cur_k = p[1], p[3]

            path.append(cur_cell)
            shelf_idx.append(cur_k)

        dummy = [path[-1]]
        last = (points[split][1], t_end)

        for p in points[split + 1:]:

            while t_end + len(dummy) - 1 < p[0] - 1:

                dummy.append(last[0])

            dummy.append(p[1])
            last = (p[1], p[0])

        shelf_steps = []

        for t in range(lift_time, t_end + 1):

            k = shelf_idx[t - q.t_start]

            if k is None:

                k = 0

            shelf_steps.append((q.segment[k], q.first_index + k))

        return PlannedCarry(agent=q.agent,
                    shelf=q.shelf,
                    t_start=q.t_start,
                    lift_time=lift_time,
                    place_time=goal.t_place,
                    path=path,
                    dummy=dummy,
                    shelf_steps=shelf_steps,
                    expanded=expanded)

def plan_carry(q: CarryQuery, 
        res: ReservationTable, 
        grid: GridMap,
        oracle: DistanceOracle,
        verbose: bool = False) -> PlannedCarry:

    return MultiLabelPlanner(grid, oracle, res, verbose=verbose).plan(q)
