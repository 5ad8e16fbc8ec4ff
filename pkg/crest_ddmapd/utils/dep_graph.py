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

from itertools import groupby
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.shelf_plan import ShelfPlan, simplify_plan
from crest_ddmapd.envs.warehouse import Cell
from crest_ddmapd.utils.errors import InvariantViolation

WaypointId = Tuple[int, int] # (shelf, simplified index)

TYPE1 = 1
TYPE2 = 2

INF = math.inf

class Run:

    """ Consecutive timesteps a shelf spends on one (simplified) waypoint. """

    __slots__ = ("shelf", "index", "cell", "t_first", "t_last")

    def __init__(self, shelf: int, index: int, cell: Cell, t_first: int, t_last: float):

        self.shelf = shelf
        self.index = index
        self.cell = cell
        self.t_first = t_first
        self.t_last = t_last

    def __repr__(self):

        return f"Run(s={self.shelf}, k={self.index}, {self.cell}, [{self.t_first}, {self.t_last}])"

def timeline_runs(shelf: int, 
        timeline: Sequence[Tuple[Cell, int]],
        hold_last: bool = True) -> List[Run]:

    """
    Groups a timed (cell, waypoint index) sequence into runs.

    Parameters:
        shelf (int): shelf id
        timeline (Sequence): entry t is the (cell, simplified index) occupied at time t
        hold_last (bool): the final run lasts forever
    Returns:
        runs (List[Run]): in time order
    """

    runs = []

    t = 0

    for (cell, k), group in groupby(timeline):

        n = sum(1 for _ in group)

        runs.append(Run(shelf, k, cell, t, t + n - 1))

        t += n

    if runs and hold_last:

        runs[-1].t_last = INF

    return runs

class DependencyGraph:

    """ Precedence DAG over simplified shelf waypoints.

    Nodes are (shelf, index) pairs. Type-1 arcs chain the waypoints of one shelf,
    Type-2 arcs (tagged with the shared cell) order different shelves through the same cell.
    The graph also keeps the traversal bookkeeping used for release times: the first
    timestep each waypoint was reached and the last traversed waypoint per shelf.
    """

    def __init__(self, 
            waypoints: Sequence[Sequence[Cell]]):

        self.waypoints: List[List[Cell]] = [list(w) for w in waypoints]

        self.g = nx.DiGraph()

        self.traversal: Dict[WaypointId, int] = {}
        self.current: List[int] = [0] * len(self.waypoints)

        for s, wps in enumerate(self.waypoints):

            self._add_chain(s, 0)

            self.traversal[(s, 0)] = 0

    def _add_chain(self, s: int, first: int):

        wps = self.waypoints[s]

        for k in range(first, len(wps)):

            self.g.add_node((s, k), cell=wps[k])

            if k > 0:

                self.g.add_edge((s, k - 1), (s, k), kind=TYPE1)

    @property
    def M(self) -> int:

        return len(self.waypoints)

    def copy(self) -> "DependencyGraph":

        other = DependencyGraph.__new__(DependencyGraph)

        other.waypoints = [list(w) for w in self.waypoints]
        other.g = self.g.copy()
        other.traversal = dict(self.traversal)
        other.current = list(self.current)

        return other

    def restore(self, other: "DependencyGraph"):

        self.waypoints = other.waypoints
        self.g = other.g
        self.traversal = other.traversal
        self.current = other.current

    def same_as(self, other: "DependencyGraph") -> bool:

        return (self.waypoints == other.waypoints
            and self.traversal == other.traversal
            and self.current == other.current
            and set(self.g.edges) == set(other.g.edges)
            and set(self.g.nodes) == set(other.g.nodes))

    def cell(self, node: WaypointId) -> Cell:

        return self.waypoints[node[0]][node[1]]

    def last_index(self, s: int) -> int:

        return len(self.waypoints[s]) - 1

    def completed(self, s: int) -> bool:

        return self.current[s] == self.last_index(s)

    def next_index(self, s: int) -> Optional[int]:

        return None if self.completed(s) else self.current[s] + 1

    def is_traversed(self, node: WaypointId) -> bool:

        return node in self.traversal

    def add_type2(self, src: WaypointId, dst: WaypointId, cell: Cell):

        self.g.add_edge(src, dst, kind=TYPE2, cell=cell)

    def type2_arcs(self) -> List[Tuple[WaypointId, WaypointId]]:

        return [(u, v) for u, v, kind in self.g.edges(data="kind") if kind == TYPE2]

    def type2_preds(self, node: WaypointId) -> List[WaypointId]:

        return [u for u in self.g.predecessors(node) if self.g.edges[u, node]["kind"] == TYPE2]

    def blocking_preds(self, node: WaypointId) -> List[WaypointId]:

        return [u for u in self.type2_preds(node) if u not in self.traversal]

    def constrained(self, node: WaypointId) -> bool:

        return len(self.blocking_preds(node)) > 0

    def earliest_arrival(self, node: WaypointId) -> float:

        # earliest timestep the shelf may reach this waypoint, INF while constrained

        t = 0

        for u in self.type2_preds(node):

            if u not in self.traversal:

                return INF

            t = max(t, self.traversal[u])

        return t

    def new_index(self, s: int) -> int:

        # last waypoint of the unconstrained segment starting at s.current

        k = self.current[s]

        while k < self.last_index(s) and not self.constrained((s, k + 1)):

            k += 1

        return k

    def mark_traversed(self, s: int, k: int, t: int):

        if (s, k) not in self.traversal:

            self.traversal[(s, k)] = t

    def set_current(self, s: int, k: int):

        self.current[s] = k

    def replace_tail(self, s: int, tail: Sequence[Cell]):

        """ Swaps the untraversed waypoints of s for a new tail (Type-2 arcs to re-derive by the caller). """

        cur = self.current[s]

        for k in range(cur + 1, len(self.waypoints[s])):

            self.g.remove_node((s, k))

        self.waypoints[s] = self.waypoints[s][:cur + 1] + list(tail)

        self._add_chain(s, cur + 1)

    def derive_arcs(self, 
            s: int, 
            timelines: Sequence[Sequence[Tuple[Cell, int]]]) -> bool:

        """
        Re-derives the Type-2 arcs of shelf s from a time-aligned reconstruction.
        Returns False, leaving the arcs added so far, when an untraversed waypoint of s
        is timed before a traversed visit of another shelf to the same cell.

        Parameters:
            s (int): shelf whose untraversed waypoints changed
            timelines (Sequence): per shelf, entry t is (cell, simplified index) at time t
        """

        cur = self.current[s]

        mine = [r for r in timeline_runs(s, timelines[s]) if r.index >= cur]

        # only the most recent visit of s.current matters
        while len(mine) > 1 and mine[0].index == cur and mine[1].index == cur:

            mine.pop(0)

        by_cell: Dict[Cell, List[Run]] = {}

        for o, timeline in enumerate(timelines):

            if o == s:

                continue

            for r in timeline_runs(o, timeline):

                by_cell.setdefault(r.cell, []).append(r)

        for r in mine:

            for q in by_cell.get(r.cell, ()):

                if q.t_last < r.t_first and r.index > cur:

                    src = (q.shelf, q.index + 1)

                    if src in self.g and src not in self.traversal:

                        self.add_type2(src, (s, r.index), r.cell)

                elif r.t_last < q.t_first:

                    if (q.shelf, q.index) in self.traversal:

                        if r.index > cur:

                            # the new route would pass before a visit already made
                            return False

                        continue

                    if r.index + 1 > self.last_index(s):

                        raise InvariantViolation(f"shelf {q.shelf} reaches the final cell of shelf {s}")

                    self.add_type2((s, r.index + 1), (q.shelf, q.index), r.cell)

        return True

    def to_dot(self) -> str:

        lines = ["digraph D {", "  rankdir=LR;"]

        def name(node):

            cell = self.cell(node)

            return f"\"{node[0]}:{node[1]}@({cell[0]},{cell[1]})\""

        for node in sorted(self.g.nodes):

            style = ", style=filled" if node in self.traversal else ""

            lines.append(f"  {name(node)} [shape=circle{style}];")

        for u, v, data in sorted(self.g.edges(data=True)):

            if data["kind"] == TYPE1:

                lines.append(f"  {name(u)} -> {name(v)};")

            else:

                lines.append(f"  {name(u)} -> {name(v)} [style=dashed];")

        lines.append("}")

        return "\n".join(lines) + "\n"

def build_dep(plan: ShelfPlan) -> Tuple[ShelfPlan, DependencyGraph]:

    """
    Builds the dependency graph of a timestep-indexed shelf plan.

    Type-2 arcs are derived on the original timing: when shelf s leaves cell v before
    shelf s' reaches it, the waypoint after s's visit of v precedes s''s waypoint at v.
    Arcs are anchored to the simplified waypoints (one per pair of visits).

    Parameters:
        plan (ShelfPlan): unsimplified, validated safe 1-robust plan
    Returns:
        (simplified plan, dependency graph)
    """

    if plan.simplified:

        raise InvariantViolation("build_dep expects the timestep-indexed plan")

    simple = simplify_plan(plan)

    dg = DependencyGraph(simple.waypoint_lists())

    by_cell: Dict[Cell, List[Run]] = {}

    for s, traj in enumerate(plan):

        timeline = []
        k = -1
        prev = None

        for cell in traj.waypoints:

            if cell != prev:

                k += 1
                prev = cell

            timeline.append((cell, k))

        for r in timeline_runs(s, timeline):

            by_cell.setdefault(r.cell, []).append(r)

    for cell, runs in by_cell.items():

        for r in runs:

            for q in runs:

                if q.shelf != r.shelf and q.t_last < r.t_first:

                    if q.index + 1 > dg.last_index(q.shelf):

                        raise InvariantViolation(f"shelf {r.shelf} visits the delivery {cell} of shelf {q.shelf}")

                    dg.add_type2((q.shelf, q.index + 1), (r.shelf, r.index), cell)

    if not is_acyclic(dg):

        Journal.log("DependencyGraph",
            "build_dep",
            "dependency graph of the input plan is cyclic",
            LogType.EXCEP,
            throw_when_excep = False)

        raise InvariantViolation("dependency graph of the input plan is cyclic")

    return simple, dg

def is_acyclic(dg: DependencyGraph) -> bool:

    return nx.is_directed_acyclic_graph(dg.g)

def prune_traversed_arcs(dg: DependencyGraph, 
        phi_ends: Iterable[int]) -> int:

    """ Removes Type-2 arcs sourced at waypoints traversed no later than the earliest shelf path end.

    Returns the number of removed arcs.
    """

    t_star = min(phi_ends, default=0)

    doomed = [(u, v) for u, v in dg.type2_arcs() 
        if u in dg.traversal and dg.traversal[u] <= t_star]

    dg.g.remove_edges_from(doomed)

    return len(doomed)

def release_time(dg: DependencyGraph, s: int, phi_end: int) -> float:

    """ Earliest time an agent may start carrying s toward s.next (INF while constrained). """

    nxt = dg.next_index(s)

    if nxt is None:

        raise InvariantViolation(f"release time requested for completed shelf {s}")

    arrival = dg.earliest_arrival((s, nxt))

    if arrival == INF:

        return INF

    # departing one step before the predecessor's next waypoint is reached
    return max(phi_end, arrival - 1)

def schedule(dg: DependencyGraph, 
        starts: Dict[int, int]) -> Dict[WaypointId, int]:

    """
    Earliest self-propelled execution time of every waypoint.

    Parameters:
        dg (DependencyGraph): acyclic dependency graph
        starts (Dict[int, int]): per uncompleted shelf, time it may leave s.current
    Returns:
        times (Dict[WaypointId, int]): traversal time for traversed waypoints,
            propagated arrival time for the others
    """

    try:

        order = list(nx.topological_sort(dg.g))

    except nx.NetworkXUnfeasible as e:

        raise InvariantViolation("cannot schedule a cyclic dependency graph") from e

    times: Dict[WaypointId, int] = {}

    for node in order:

        if node in dg.traversal:

            times[node] = dg.traversal[node]

            continue

        s, k = node

        prev = starts[s] if k - 1 == dg.current[s] else times[(s, k - 1)]

        t = prev + 1

        for u in dg.type2_preds(node):

            t = max(t, times[u])

        times[node] = t

    return times

def estimate_makespan(dg: DependencyGraph, starts: Dict[int, int]) -> int:

    times = schedule(dg, starts)

    return max((times[(s, dg.last_index(s))] for s in range(dg.M)), default=0)
