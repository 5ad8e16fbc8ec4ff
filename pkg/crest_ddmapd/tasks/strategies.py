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
from dataclasses import dataclass
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import Cell, DistanceOracle, GridMap
from crest_ddmapd.planners.reservations import INF, ReservationLayer, complement, merge_intervals
from crest_ddmapd.planners.sipp import sipp_search
from crest_ddmapd.utils.dep_graph import (TYPE2, DependencyGraph, WaypointId, 
                                        estimate_makespan, is_acyclic, schedule)
from crest_ddmapd.utils.errors import InvariantViolation

Timeline = List[Tuple[Cell, int]]

_STEPS = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)) # wait first, then moves

@dataclass
class Reconstruction:

    timelines: List[Timeline] # per shelf, (cell, simplified index) at each time
    times: Dict[WaypointId, int]
    starts: Dict[int, int]

    def plan(self) -> ShelfPlan:

        return ShelfPlan.from_waypoints([[c for c, _ in tl] for tl in self.timelines])

    def arrival(self, s: int) -> int:

        return len(self.timelines[s]) - 1

    @property
    def horizon(self) -> int:

        return max(len(tl) for tl in self.timelines) - 1

def extract_mapf(state, dg: Optional[DependencyGraph] = None) -> Reconstruction:

    """
    Rebuilds the unexecuted shelf trajectories as a time-aligned plan.

    Each shelf keeps its committed path, then advances one untraversed waypoint per step
    once its dependencies allow it. Unassigned shelves idle until the earliest agent is available.

    Parameters:
        state (ExecutionState): the execution state
        dg (DependencyGraph): graph to reconstruct from, defaults to the state's
    Returns:
        reconstruction (Reconstruction)
    """

    dg = state.dg if dg is None else dg

    starts = state.estimate_starts()
    times = schedule(dg, starts)

    timelines = []

    for s in range(dg.M):

        tl = list(state.phi[s])

        for k in range(dg.current[s] + 1, len(dg.waypoints[s])):

            t = times[(s, k)]

            while len(tl) < t:

                tl.append(tl[-1])

            tl.append((dg.waypoints[s][k], k))

        timelines.append(tl)

    return Reconstruction(timelines, times, starts)

def _at(timeline: Sequence[Tuple[Cell, int]], t: int) -> Cell:

    return timeline[min(t, len(timeline) - 1)][0]

def _indexed(path: Sequence[Cell], first_index: int) -> Timeline:

    out = []
    k = first_index

    for i, cell in enumerate(path):

        if i > 0 and cell != path[i - 1]:

            k += 1

        out.append((cell, k))

    return out

def _tail(path: Sequence[Cell]) -> List[Cell]:

    return [cell for cell, _ in groupby(path)][1:]

def _prefix(timeline: Timeline, t0: int) -> Timeline:

    out = list(timeline[:t0])

    while len(out) < t0:

        out.append(timeline[-1])

    return out

def committed_visits(state, exclude: Sequence[int] = ()) -> np.ndarray:

    """ Per cell, the last time a committed shelf path other than the excluded ones is there (-1 if never). """

    grid = state.inst.map

    settled = np.full((grid.height, grid.width), -1, dtype=np.int64)

    for o in range(state.M):

        if o in exclude:

            continue

        for t, (cell, _) in enumerate(state.phi[o]):

            settled[cell] = max(settled[cell], t)

    return settled

def _log(state, entry: Dict):

    state.strategy_log.append(entry)

    if state.verbose:

        Journal.log("Strategies",
            entry["strategy"],
            ", ".join(f"{k}={v}" for k, v in entry.items() if k != "strategy"),
            LogType.STAT)

def _reconstruction_horizon(state, dg: DependencyGraph, recon: Reconstruction) -> int:

    untraversed = sum(len(dg.waypoints[s]) - 1 - dg.current[s] for s in range(dg.M))
    committed = max(state.phi_end(s) for s in range(dg.M))

    return max(committed + untraversed + state.N, recon.horizon + 1)

def time_expanded_route(grid: GridMap,
        start: Cell,
        t0: int,
        goal: Cell,
        others: Sequence[Timeline],
        forbidden: Sequence[Cell],
        horizon: int,
        settled: Optional[np.ndarray] = None) -> Optional[List[Cell]]:

    """
    Earliest-arrival route among fixed timelines, preferring long unconstrained carries.

    Breadth-first over (cell, step) layers. Among the earliest arrivals, maximizes the
    number of steps before the route enters a cell some other timeline visited earlier.
    A cell is closed at step t while settled (last committed visit per cell) is at least t.
    Ties resolve by the fixed move order (wait, up, down, left, right).

    Returns:
        path (List[Cell]): cell per step from t0 to the arrival, None within the horizon
    """

    h, w = grid.height, grid.width

    big = np.iinfo(np.int32).max

    first_visit = np.full((h, w), big, dtype=np.int64)
    last_visit = np.full((h, w), -1, dtype=np.int64)

    for tl in others:

        for t, (cell, _) in enumerate(tl):

            first_visit[cell] = min(first_visit[cell], t)

        last_visit[tl[-1][0]] = big

        for t, (cell, _) in enumerate(tl):

            if last_visit[cell] != big:

                last_visit[cell] = max(last_visit[cell], t)

    first_visit[start] = big

    static = grid.blocked.copy()

    for cell in forbidden:

        if cell != start:

            static[cell] = True

    val = np.full((h, w), -1, dtype=np.int64)
    val[start] = big

    dirs = []

    for t in range(t0 + 1, horizon + 1):

        padded = np.full((h + 2, w + 2), -1, dtype=np.int64)
        padded[1:-1, 1:-1] = val

        blocked_swap = np.zeros((len(_STEPS), h, w), dtype=bool)

        occupied = np.zeros((h, w), dtype=bool)

        for tl in others:

            here, there = _at(tl, t - 1), _at(tl, t)

            occupied[there] = True

            if here != there:

                # moving there -> here arriving at t swaps with this timeline
                d = _STEPS.index((here[0] - there[0], here[1] - there[1]))
                blocked_swap[d][here] = True

        cands = np.empty((len(_STEPS), h, w), dtype=np.int64)

        for i, (dr, dc) in enumerate(_STEPS):

            cands[i] = padded[1 - dr:h + 1 - dr, 1 - dc:w + 1 - dc]

        cands[blocked_swap] = -1

        best_dir = np.argmax(cands, axis=0)
        val = np.take_along_axis(cands, best_dir[None], axis=0)[0]

        val[occupied | static] = -1

        if settled is not None:

            val[settled >= t] = -1

        val[(val == big) & (first_visit < t)] = t - t0

        dirs.append(best_dir)

        if val[goal] >= 0 and last_visit[goal] < t:

            path = [goal]
            cell = goal

            for layer in reversed(dirs):

                dr, dc = _STEPS[layer[cell]]
                cell = (cell[0] - dr, cell[1] - dc)
                path.append(cell)

            return path[::-1]

        if not (val >= 0).any():

            return None

    return None

def single_replan(s: int, state, oracle: Optional[DistanceOracle] = None) -> bool:

    """
    Replans the unexecuted trajectory of shelf s against the reconstructed plan.

    The route starts once the holder of s can be beneath it and never enters a cell before
    a committed visit of another shelf there. Accepted only if the dependency graph stays
    acyclic and a released s.next stays released; otherwise plan and graph are left untouched.
    """

    dg = state.dg

    cur = dg.current[s]
    was_released = not dg.constrained((s, cur + 1))

    recon = extract_mapf(state)

    t0 = recon.starts[s]
    horizon = _reconstruction_horizon(state, dg, recon)

    others = [tl for o, tl in enumerate(recon.timelines) if o != s]

    path = time_expanded_route(state.inst.map, dg.waypoints[s][cur], t0, state.inst.shelves[s][1],
                    others, state.inst.agents, horizon, settled=committed_visits(state, exclude=(s,)))

    entry = {"strategy": "STR", "shelf": s}

    if path is None:

        _log(state, {**entry, "accepted": False, "reason": "no route"})

        return False

    tail = _tail(path)

    if tail == dg.waypoints[s][cur + 1:]:

        _log(state, {**entry, "accepted": True, "changed": False})

        return True

    trial = dg.copy()
    trial.replace_tail(s, tail)

    timelines = list(recon.timelines)
    timelines[s] = _prefix(recon.timelines[s], t0) + _indexed(path, cur)

    if not trial.derive_arcs(s, timelines):

        _log(state, {**entry, "accepted": False, "reason": "precedes a committed visit"})

        return False

    if not is_acyclic(trial):

        _log(state, {**entry, "accepted": False, "reason": "cycle"})

        return False

    if was_released and trial.constrained((s, cur + 1)):

        _log(state, {**entry, "accepted": False, "reason": "constrains s.next"})

        return False

    dg.restore(trial)

    _log(state, {**entry, "accepted": True, "changed": True, 
                "arrival_before": recon.arrival(s), "arrival_after": t0 + len(path) - 1})

    return True

def _reverse(dg: DependencyGraph, 
        u: WaypointId, 
        v: WaypointId, 
        created: Set[Tuple[WaypointId, WaypointId]]) -> bool:

    # u -> v says shelf x leaves the shared cell before shelf y reaches it; let y go first

    (x, i), (y, j) = u, v

    new_src, new_dst = (y, j + 1), (x, i - 1)

    if j + 1 > dg.last_index(y) or new_dst in dg.traversal:

        return False

    cell = dg.g.edges[u, v]["cell"]

    dg.g.remove_edge(u, v)
    dg.add_type2(new_src, new_dst, cell)

    created.add((new_src, new_dst))

    return True

def _resolve(dg: DependencyGraph, 
        w: WaypointId,
        created: Set[Tuple[WaypointId, WaypointId]], 
        depth: int, 
        depth_limit: int,
        baseline: int, 
        starts: Dict[int, int]) -> Optional[DependencyGraph]:

    try:

        cycle = nx.find_cycle(dg.g)

    except nx.NetworkXNoCycle:

        if dg.constrained(w):

            return None

        return dg if estimate_makespan(dg, starts) <= baseline else None

    if depth >= depth_limit:

        return None

    for u, v in cycle:

        if dg.g.edges[u, v]["kind"] != TYPE2 or (u, v) in created:

            continue

        branch = dg.copy()
        branch_created = set(created)

        if not _reverse(branch, u, v, branch_created):

            continue

        found = _resolve(branch, w, branch_created, depth + 1, depth_limit, baseline, starts)

        if found is not None:

            return found

    return None

def dep_switch(w: WaypointId, state, depth_limit: int = 5) -> bool:

    """
    Releases waypoint w by letting its shelf pass the shared cells first.

    Every blocking Type-2 arc into w is reversed; cycles are resolved depth-first by
    reversing the Type-2 arcs of the detected cycle, up to depth_limit. The first acyclic
    graph whose estimated makespan does not exceed the current one is adopted.
    """

    dg = state.dg

    starts = state.estimate_starts()
    baseline = estimate_makespan(dg, starts)

    trial = dg.copy()
    created: Set[Tuple[WaypointId, WaypointId]] = set()

    entry = {"strategy": "DS", "shelf": w[0], "waypoint": w[1], "makespan_before": baseline}

    for u in sorted(trial.blocking_preds(w)):

        if not _reverse(trial, u, w, created):

            _log(state, {**entry, "accepted": False, "reason": "irreversible"})

            return False

    found = _resolve(trial, w, created, 1, depth_limit, baseline, starts)

    if found is None:

        _log(state, {**entry, "accepted": False, "reason": "no acyclic switch"})

        return False

    after = estimate_makespan(found, starts)

    dg.restore(found)

    _log(state, {**entry, "accepted": True, "makespan_after": after, "reversed": len(created)})

    return True

def group_replan(s: int, state, oracle: DistanceOracle) -> bool:

    """
    Replans the unassigned shelves constraining s.next so that s may pass first.

    Each constraining shelf must keep out of s.next until s has reached it, and out of any
    cell before a committed visit of another shelf there. Adopted only if every replan
    succeeds, the graph stays acyclic, no shelf arrives later in the reconstructed plan and
    the estimated makespan does not grow.
    """

    dg = state.dg
    grid = state.inst.map

    w = (s, dg.next_index(s))
    blockers = sorted(dg.blocking_preds(w))
    constraining = sorted({u[0] for u in blockers})

    entry = {"strategy": "GTR", "shelf": s, "waypoint": w[1], "constraining": constraining}

    for o in constraining:

        if state.shelf_agent[o] is not None:

            _log(state, {**entry, "accepted": False, "reason": f"shelf {o} assigned"})

            return False

    for (o, i) in blockers:

        if (o, i - 1) in dg.traversal:

            _log(state, {**entry, "accepted": False, "reason": f"shelf {o} already at the cell"})

            return False

    starts = state.estimate_starts()
    baseline = estimate_makespan(dg, starts)

    freed = dg.copy()
    freed.g.remove_edges_from([(u, w) for u in blockers])

    before = extract_mapf(state)
    recon = extract_mapf(state, freed)

    k = recon.times[w]
    target = dg.cell(w)

    layer = ReservationLayer()

    for o, tl in enumerate(recon.timelines):

        layer.set_path(o, [c for c, _ in tl], 0, hold=True)

    forbidden = set(state.inst.agents)

    def intervals_for(o):

        settled = committed_visits(state, exclude=(o,))

        def intervals(cell):

            occ = layer.occupied(cell, exclude=(o,))

            if settled[cell] >= 0:

                occ = merge_intervals(occ + [(0, int(settled[cell]))])

            if cell == target:

                occ = merge_intervals(occ + [(0, k)])

            return complement(occ)

        return intervals

    timelines = list(recon.timelines)
    tails = {}

    for o in constraining:

        cur = dg.current[o]
        t0 = recon.starts[o]
        old_arrival = recon.arrival(o)

        path = sipp_search(grid, oracle, dg.waypoints[o][cur], t0, state.inst.shelves[o][1],
                    intervals_for(o), 
                    lambda u, v, t, o=o: layer.swap_blocked(u, v, t, exclude=(o,)),
                    forbidden=forbidden - {dg.waypoints[o][cur]},
                    max_time=old_arrival)

        if path is None:

            _log(state, {**entry, "accepted": False, "reason": f"no replan for shelf {o}"})

            return False

        timelines[o] = _prefix(recon.timelines[o], t0) + _indexed(path, cur)
        tails[o] = _tail(path)

        layer.set_path(o, [c for c, _ in timelines[o]], 0, hold=True)

    trial = dg.copy()

    for o in constraining:

        trial.replace_tail(o, tails[o])

    for o in constraining:

        if not trial.derive_arcs(o, timelines):

            _log(state, {**entry, "accepted": False, "reason": f"shelf {o} precedes a committed visit"})

            return False

    if trial.constrained(w) or not is_acyclic(trial):

        _log(state, {**entry, "accepted": False, "reason": "still constrained or cyclic"})

        return False

    after = estimate_makespan(trial, starts)

    after_recon = extract_mapf(state, trial)
    later = [x for x in range(dg.M) if after_recon.arrival(x) > before.arrival(x)]

    if later:

        _log(state, {**entry, "accepted": False, "reason": f"later arrival of shelves {later}"})

        return False

    if after > baseline:

        _log(state, {**entry, "accepted": False, "reason": "makespan", 
                    "makespan_before": baseline, "makespan_after": after})

        return False

    dg.restore(trial)

    _log(state, {**entry, "accepted": True, "makespan_before": baseline, "makespan_after": after})

    return True
