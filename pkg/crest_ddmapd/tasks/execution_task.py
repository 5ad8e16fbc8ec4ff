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
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.shelf_plan import ShelfPlan, validate_shelf_plan
from crest_ddmapd.envs.warehouse import UNREACHABLE, Cell, DistanceOracle, ExecutionConfig, Instance
from crest_ddmapd.planners.mlsipp import CarryQuery, MultiLabelPlanner, PlannedCarry
from crest_ddmapd.planners.reservations import ReservationTable
from crest_ddmapd.utils.dep_graph import (INF, DependencyGraph, WaypointId, build_dep,
                                        is_acyclic, prune_traversed_arcs, release_time)
from crest_ddmapd.utils.errors import InvariantViolation, PlanError, PlannerFailure
from crest_ddmapd.utils.rt_factor import RtFactor

@dataclass
class ExecutionResult:

    method: str
    overhead: int
    agent_paths: List[List[Cell]] # pi_a, entry t is the cell at time t
    shelf_paths: List[List[Cell]] # phi_s
    shelf_indices: List[List[int]] # simplified waypoint index of phi_s at each time
    dummies: List[List[Cell]] # live dummy segments, each starting at the end of pi_a
    events: List[Tuple[str, int, int, int]] # ("lift" | "place", agent, shelf, t)
    arcs: List[Tuple[WaypointId, WaypointId]] = field(default_factory=list) # Type-2 arcs in force at traversal
    runtime_s: float = 0.0
    phase_times: Dict[str, float] = field(default_factory=dict)
    phase_counts: Dict[str, int] = field(default_factory=dict)
    strategy_log: List[Dict[str, Any]] = field(default_factory=list)
    rounds: int = 0
    expanded: int = 0

    @property
    def N(self) -> int:

        return len(self.agent_paths)

    @property
    def M(self) -> int:

        return len(self.shelf_paths)

    def lifts(self) -> List[Tuple[int, int, int]]:

        return [(a, s, t) for kind, a, s, t in self.events if kind == "lift"]

    def places(self) -> List[Tuple[int, int, int]]:

        return [(a, s, t) for kind, a, s, t in self.events if kind == "place"]

    def makespan(self) -> int:

        return max((len(p) - 1 for p in self.agent_paths), default=0)

class ExecutionState:

    """ Everything an executor commits: agent paths, shelf paths, dummies, assignments and D. """

    def __init__(self,
            inst: Instance,
            plan: ShelfPlan,
            oracle: Optional[DistanceOracle] = None):

        self.inst = inst
        self.plan = plan # timestep-indexed input plan
        self.oracle = DistanceOracle(inst.map) if oracle is None else oracle

        simple, self.dg = build_dep(plan)
        self.initial_dg = self.dg.copy()

        N, M = inst.N, inst.M

        self.pi: List[List[Cell]] = [[a] for a in inst.agents]
        self.dummies: List[List[Cell]] = [[a] for a in inst.agents]
        self.phi: List[List[Tuple[Cell, int]]] = [[(p, 0)] for p, _ in inst.shelves]

        self.active = [False] * N
        self.assignment: List[Optional[int]] = [None] * N # agent -> shelf
        self.shelf_agent: List[Optional[int]] = [None] * M # shelf -> agent

        self.completed = [self.dg.completed(s) for s in range(M)]

        self.events: List[Tuple[str, int, int, int]] = []
        self.arcs: Set[Tuple[WaypointId, WaypointId]] = set()
        self.strategy_log: List[Dict[str, Any]] = []
        self.verbose = False # log every strategy attempt

        self.res = ReservationTable()

        for a in range(N):

            self.res.reserve_agent(a, self.pi[a], self.dummies[a])

        for s in range(M):

            self.res.reserve_shelf(s, [p[0] for p in self.phi[s]])

    @property
    def N(self) -> int:

        return self.inst.N

    @property
    def M(self) -> int:

        return self.inst.M

    def t_avail(self, a: int) -> int:

        return len(self.pi[a]) - 1

    def a_current(self, a: int) -> Cell:

        return self.pi[a][-1]

    def phi_end(self, s: int) -> int:

        return len(self.phi[s]) - 1

    def s_current(self, s: int) -> Cell:

        return self.phi[s][-1][0]

    def t_avail_min(self) -> int:

        return min(self.t_avail(a) for a in range(self.N))

    def uncompleted(self) -> List[int]:

        return [s for s in range(self.M) if not self.completed[s]]

    def release_time(self, s: int) -> float:

        return release_time(self.dg, s, self.phi_end(s))

    def estimate_starts(self) -> Dict[int, int]:

        # unassigned shelves cannot be carried before the earliest agent is available,
        # assigned ones not before their agent is beneath them

        t_min = self.t_avail_min()

        starts = {}

        for s in self.uncompleted():

            end = self.phi_end(s)
            a = self.shelf_agent[s]

            if a is None:

                starts[s] = max(end, t_min)

            else:

                reach = self.oracle.dist(self.a_current(a), self.s_current(s))

                starts[s] = end if reach == UNREACHABLE else max(end, self.t_avail(a) + int(reach))

        return starts

    def assign(self, a: int, s: int):

        old = self.assignment[a]

        if old is not None:

            self.shelf_agent[old] = None

        prev = self.shelf_agent[s]

        if prev is not None:

            self.assignment[prev] = None
            self.active[prev] = False

        self.assignment[a] = s
        self.shelf_agent[s] = a

    def release_agent(self, a: int):

        s = self.assignment[a]

        if s is not None:

            self.shelf_agent[s] = None

        self.assignment[a] = None
        self.active[a] = False

    def snapshot(self) -> Dict[str, Any]:

        return {"t_avail": [self.t_avail(a) for a in range(self.N)],
                "assignment": list(self.assignment),
                "active": list(self.active),
                "current": list(self.dg.current),
                "phi_end": [self.phi_end(s) for s in range(self.M)],
                "completed": list(self.completed)}

class ExecutionTask(ABC):

    """ Common mechanics of the executors: carry queries, commitment and result assembly.

    Args:
        inst (Instance): a well-formed instance
        plan (ShelfPlan): safe 1-robust timestep-indexed shelf plan
        config (ExecutionConfig): defaults to the instance configuration
        check_plan (bool): validate the plan before running
        verbose (bool): log per-carry planner traces
    """

    method = "abstract"

    def __init__(self, 
            inst: Instance, 
            plan: ShelfPlan,
            config: Optional[ExecutionConfig] = None,
            check_plan: bool = True,
            verbose: bool = False):

        self.inst = inst if config is None else inst.with_config(config)
        self.config = self.inst.config

        self._verbose = verbose

        if plan.simplified:

            raise PlanError("executors take the timestep-indexed plan")

        if check_plan:

            validity = validate_shelf_plan(plan, self.inst)

            if not validity.all_valid:

                exception = f"input plan fails {validity.failed()}: {validity.witnesses}"

                Journal.log(self.__class__.__name__,
                    "__init__",
                    exception,
                    LogType.EXCEP,
                    throw_when_excep = False)

                raise PlanError(exception)

        self.plan = plan

        self.oracle = DistanceOracle(self.inst.map)

        self._timer = RtFactor()

        self.state: Optional[ExecutionState] = None

        self._expanded = 0
        self._rounds = 0

    @abstractmethod
    def _execute(self):

        pass

    def run(self) -> ExecutionResult:

        self._timer.reset()

        self.state = ExecutionState(self.inst, self.plan, self.oracle)
        self.state.verbose = self._verbose

        self._execute()

        runtime = self._timer.elapsed()
        per_shelf = self._timer.get_avrg_time(len(self.inst.rearranged))

        if self._verbose:

            Journal.log(self.__class__.__name__,
                "run",
                f"{self.method}: {self._rounds} rounds, {len(self.state.events) // 2} carries, "
                f"{runtime:.3f} s ({1e3 * per_shelf:.2f} ms per rearranged shelf)",
                LogType.INFO)

        return self._result(runtime)

    def _planner(self) -> MultiLabelPlanner:

        return MultiLabelPlanner(self.inst.map, self.oracle, self.state.res, verbose=self._verbose)

    def _query(self, 
            a: int, 
            s: int, 
            new_index: int,
            lift_earliest: Optional[int] = None,
            forward_only: bool = False) -> CarryQuery:

        st = self.state
        dg = st.dg

        cur = dg.current[s]

        segment = tuple(dg.waypoints[s][cur:new_index + 1])
        earliest = tuple([0] + [dg.earliest_arrival((s, k)) for k in range(cur + 1, new_index + 1)])

        return CarryQuery(agent=a,
                    start=st.a_current(a),
                    t_start=st.t_avail(a),
                    home=self.inst.agents[a],
                    shelf=s,
                    segment=segment,
                    first_index=cur,
                    earliest=earliest,
                    lift_earliest=st.phi_end(s) if lift_earliest is None else lift_earliest,
                    overhead=self.config.overhead,
                    allow_wait=not forward_only,
                    allow_backward=not forward_only)

    def _carry(self, 
            a: int, 
            s: int, 
            new_index: int,
            lift_earliest: Optional[int] = None,
            forward_only: bool = False) -> PlannedCarry:

        q = self._query(a, s, new_index, lift_earliest, forward_only)

        try:

            with self._timer.measure("planning"):

                carry = self._planner().plan(q)

        except PlannerFailure as e:

            raise InvariantViolation(f"planner failure: {e}", self.state.snapshot()) from e

        self._commit(carry)

        return carry

    def _commit(self, carry: PlannedCarry):

        st = self.state
        a, s = carry.agent, carry.shelf

        if carry.t_start != st.t_avail(a) or carry.path[0] != st.a_current(a):

            raise InvariantViolation(f"carry of agent {a} does not continue its path", st.snapshot())

        st.pi[a].extend(carry.path[1:])
        st.dummies[a] = list(carry.dummy)

        phi = st.phi[s]

        while len(phi) < carry.lift_time:

            phi.append(phi[-1])

        del phi[carry.lift_time:]

        phi.extend(carry.shelf_steps)

        for t in range(carry.lift_time, len(phi)):

            node = (s, phi[t][1])

            if not st.dg.is_traversed(node):

                st.arcs.update((u, node) for u in st.dg.type2_preds(node))

            st.dg.mark_traversed(s, node[1], t)

        st.dg.set_current(s, phi[-1][1])

        st.res.reserve_agent(a, st.pi[a], st.dummies[a])
        st.res.reserve_shelf(s, [p[0] for p in phi])

        st.events.append(("lift", a, s, carry.lift_time))
        st.events.append(("place", a, s, carry.place_time))

        self._expanded += carry.expanded

        if st.dg.completed(s):

            st.completed[s] = True

            st.release_agent(a)

    def _prune(self):

        with self._timer.measure("pruning"):

            removed = prune_traversed_arcs(self.state.dg, 
                        [self.state.phi_end(s) for s in range(self.state.M)])

        if self.config.check_invariants and not is_acyclic(self.state.dg):

            raise InvariantViolation("dependency graph became cyclic after pruning", self.state.snapshot())

        return removed

    def _result(self, runtime: float) -> ExecutionResult:

        st = self.state

        return ExecutionResult(method=self.method,
                    overhead=self.config.overhead,
                    agent_paths=[list(p) for p in st.pi],
                    shelf_paths=[[c for c, _ in phi] for phi in st.phi],
                    shelf_indices=[[k for _, k in phi] for phi in st.phi],
                    dummies=[list(d) for d in st.dummies],
                    events=list(st.events),
                    arcs=sorted(st.arcs),
                    runtime_s=runtime,
                    phase_times=self._timer.get_phase_times(),
                    phase_counts=self._timer.get_phase_counts(),
                    strategy_log=list(st.strategy_log),
                    rounds=self._rounds,
                    expanded=self._expanded)
