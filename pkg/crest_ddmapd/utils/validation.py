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
from dataclasses import dataclass, field
from itertools import groupby

from typing import Dict, List, Optional, Sequence, Tuple

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import Cell, Instance

# methods whose shelves follow the input plan in its original dependency order
ORDER_PRESERVING = ("crest", "baseline")

CHECKS = ("agent_moves", "agent_collisions", "shelf_moves", "shelf_collisions",
    "carried_moves", "deliveries", "overhead", "precedence")

@dataclass
class ExecValidity:

    violations: List[Tuple[str, tuple]] = field(default_factory=list)
    precedence_checked: bool = False

    @property
    def clean(self) -> bool:

        return not self.violations

    def failed(self) -> List[str]:

        seen = {name for name, _ in self.violations}

        return [c for c in CHECKS if c in seen]

    def first(self, check: str) -> Optional[tuple]:

        return next((w for name, w in self.violations if name == check), None)

    def _add(self, check: str, witness: tuple):

        self.violations.append((check, witness))

def _pad(path: Sequence[Cell], t: int) -> Cell:

    return path[min(t, len(path) - 1)]

def _adjacent(u: Cell, v: Cell) -> bool:

    return abs(u[0] - v[0]) + abs(u[1] - v[1]) == 1

def _check_moves(name: str, 
        paths: Sequence[Sequence[Cell]], 
        inst: Instance, 
        report: ExecValidity):

    for i, path in enumerate(paths):

        for t, cell in enumerate(path):

            if not inst.map.is_free(cell):

                report._add(name, (i, t, cell))

            elif t > 0 and cell != path[t - 1] and not _adjacent(path[t - 1], cell):

                report._add(name, (i, t, path[t - 1], cell))

def _check_collisions(name: str, 
        paths: Sequence[Sequence[Cell]], 
        report: ExecValidity):

    horizon = max((len(p) for p in paths), default=1)

    for t in range(horizon):

        seen: Dict[Cell, int] = {}

        for i, path in enumerate(paths):

            cell = _pad(path, t)

            if cell in seen:

                report._add(name, ("vertex", seen[cell], i, t))

            seen[cell] = i

        if t == 0:

            continue

        moves = {}

        for i, path in enumerate(paths):

            u, v = _pad(path, t - 1), _pad(path, t)

            if u != v:

                j = moves.get((v, u))

                if j is not None:

                    report._add(name, ("edge", j, i, t))

                moves[(u, v)] = i

def _carries(events) -> Tuple[Dict[int, List[Tuple[int, int, int]]], List[tuple]]:

    # per shelf: (agent, lift, place); unmatched events are returned apart

    open_lifts: Dict[Tuple[int, int], int] = {}

    carries: Dict[int, List[Tuple[int, int, int]]] = {}
    unmatched = []

    for kind, a, s, t in events:

        if kind == "lift":

            if (a, s) in open_lifts:

                unmatched.append(("lift", a, s, open_lifts[(a, s)]))

            open_lifts[(a, s)] = t

        elif (a, s) in open_lifts:

            carries.setdefault(s, []).append((a, open_lifts.pop((a, s)), t))

        else:

            unmatched.append((kind, a, s, t))

    unmatched.extend(("lift", a, s, t) for (a, s), t in open_lifts.items())

    return carries, unmatched

def _original_arcs(plan: ShelfPlan) -> List[Tuple[Tuple[int, int], Tuple[int, int]]]:

    # (x, i) -> (y, j): shelf x reaches its simplified waypoint i before y enters the shared cell at j

    visits: Dict[Cell, List[Tuple[int, int, int, float]]] = {}

    for s, traj in enumerate(plan):

        t = 0
        runs = [(cell, len(list(group))) for cell, group in groupby(traj.waypoints)]

        for k, (cell, n) in enumerate(runs):

            last = float("inf") if k == len(runs) - 1 else t + n - 1
            visits.setdefault(cell, []).append((s, k, t, last))

            t += n

    arcs = []

    for runs in visits.values():

        for x, i, _, x_last in runs:

            for y, j, y_first, _ in runs:

                if x != y and x_last < y_first:

                    arcs.append(((x, i + 1), (y, j)))

    return arcs

def _first_times(indices: Sequence[int]) -> Dict[int, int]:

    first: Dict[int, int] = {}

    for t, k in enumerate(indices):

        first.setdefault(k, t)

    return first

def validate_execution(result, 
        inst: Instance, 
        plan: ShelfPlan,
        check_precedence: Optional[bool] = None) -> ExecValidity:

    """
    Independent check of an execution against the collision and carrying rules.

    Parameters:
        result (ExecutionResult): committed agent paths, shelf paths, dummies and events
        inst (Instance): the instance
        plan (ShelfPlan): the timestep-indexed plan the run started from
        check_precedence (bool): compare waypoint traversal with the dependencies of
            the input plan; by default only for runs that never reorder shelves.
            Arcs the run recorded at traversal time are checked whenever present
    Returns:
        report (ExecValidity): every violation with a witness
    """

    report = ExecValidity()

    N, M = inst.N, inst.M
    delta = result.overhead

    if len(result.agent_paths) != N or len(result.shelf_paths) != M:

        report._add("agent_moves", ("count", len(result.agent_paths), len(result.shelf_paths)))

        return report

    agent_paths = [list(p) for p in result.agent_paths]
    shelf_paths = [list(p) for p in result.shelf_paths]

    for a, path in enumerate(agent_paths):

        if not path or path[0] != inst.agents[a]:

            report._add("agent_moves", (a, 0, path[0] if path else None))

    for s, path in enumerate(shelf_paths):

        if not path or path[0] != inst.shelves[s][0]:

            report._add("shelf_moves", (s, 0, path[0] if path else None))

    if not report.clean:

        return report

    # agents keep moving along their dummies after their committed paths
    timelines = []

    for a, path in enumerate(agent_paths):

        dummy = list(result.dummies[a]) if a < len(result.dummies) else []

        if dummy and dummy[0] != path[-1]:

            report._add("agent_moves", (a, len(path) - 1, path[-1], dummy[0]))

        timelines.append(path + dummy[1:])

    _check_moves("agent_moves", timelines, inst, report)
    _check_collisions("agent_collisions", timelines, report)

    _check_moves("shelf_moves", shelf_paths, inst, report)
    _check_collisions("shelf_collisions", shelf_paths, report)

    for s, path in enumerate(shelf_paths):

        if path[-1] != inst.shelves[s][1]:

            report._add("deliveries", (s, path[-1]))

    carries, unmatched = _carries(result.events)

    for event in unmatched:

        report._add("overhead", ("unmatched",) + tuple(event))

    for s, path in enumerate(shelf_paths):

        held = set()

        for a, lift, place in carries.get(s, []):

            agent = agent_paths[a]

            if place + delta > len(agent) - 1 or lift + delta > place:

                report._add("overhead", (a, s, lift, place))

                continue

            for t in range(lift, place + delta + 1):

                if _pad(path, t) != agent[t]:

                    report._add("carried_moves", ("apart", a, s, t))

                    break

            for t0 in (lift, place):

                if any(agent[t] != agent[t0] for t in range(t0, t0 + delta + 1)):

                    report._add("overhead", ("moved", a, s, t0))

            held.update(range(lift + delta + 1, place + 1))

        for t in range(1, len(path)):

            if path[t] != path[t - 1] and t not in held:

                report._add("carried_moves", ("unheld", s, t))

    recorded = [tuple(map(tuple, arc)) for arc in getattr(result, "arcs", None) or ()]

    if check_precedence is None:

        use_plan = result.method in ORDER_PRESERVING
        check_precedence = use_plan or bool(recorded)

    else:

        use_plan = check_precedence

    indices = getattr(result, "shelf_indices", None)

    if check_precedence and indices and len(indices) == M:

        report.precedence_checked = True

        first = [_first_times(idx) for idx in indices]

        required = set(recorded)

        if use_plan:

            required.update(_original_arcs(plan))

        for (x, i), (y, j) in sorted(required):

            tx, ty = first[x].get(i), first[y].get(j)

            if ty is not None and (tx is None or ty < tx):

                report._add("precedence", ((x, i), (y, j), tx, ty))

    return report
