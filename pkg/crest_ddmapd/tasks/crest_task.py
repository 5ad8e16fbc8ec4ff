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
from typing import List, Optional, Tuple

import numpy as np

from scipy.optimize import linear_sum_assignment

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import UNREACHABLE, ExecutionConfig, Instance
from crest_ddmapd.tasks.execution_task import ExecutionResult, ExecutionState, ExecutionTask
from crest_ddmapd.tasks.strategies import dep_switch, group_replan, single_replan
from crest_ddmapd.utils.dep_graph import INF, is_acyclic
from crest_ddmapd.utils.errors import InvariantViolation

def t_hat_start(a: int, s: int, state: ExecutionState, oracle) -> float:

    """ Estimated earliest time agent a could start carrying shelf s. """

    t_rel = state.release_time(s)

    if t_rel == INF:

        raise InvariantViolation(f"shelf {s} is not released")

    reach = state.t_avail(a) + oracle.dist(state.a_current(a), state.s_current(s))

    return max(reach, t_rel)

def min_cost_matching(cost: np.ndarray) -> List[Tuple[int, int]]:

    rows, cols = linear_sum_assignment(cost)

    return list(zip(rows.tolist(), cols.tolist()))

def assignment_cost_matrix(agents: List[int], 
        shelves: List[int], 
        state: ExecutionState, 
        oracle, 
        penalty: int) -> np.ndarray:

    """
    Estimated waiting delay of every (agent, candidate shelf) pair.

    Parameters:
        agents (List[int]): matrix rows
        shelves (List[int]): matrix columns, released and uncompleted
        penalty (int): cost of padding entries and unreachable pairs
    Returns:
        cost (np.ndarray): square matrix, padded with penalty
    """

    n = max(len(agents), len(shelves))

    cost = np.full((n, n), float(penalty))

    for i, a in enumerate(agents):

        for j, s in enumerate(shelves):

            d = oracle.dist(state.a_current(a), state.s_current(s))

            if d == UNREACHABLE:

                continue

            cost[i, j] = max(state.t_avail(a) + d - state.release_time(s), 0)

    return cost

def _best_matched_pair(agents: List[int], 
        shelves: List[int], 
        state: ExecutionState, 
        oracle, 
        penalty: int) -> Optional[Tuple[float, int, int]]:

    # (t_hat_start, shelf, agent) of the earliest-starting matched pair, None if nothing matches

    if not agents or not shelves:

        return None

    cost = assignment_cost_matrix(agents, shelves, state, oracle, penalty)

    best = None

    for i, j in min_cost_matching(cost):

        if i >= len(agents) or j >= len(shelves) or cost[i, j] >= penalty:

            continue

        a, s = agents[i], shelves[j]

        key = (t_hat_start(a, s, state, oracle), s, a)

        if best is None or key < best:

            best = key

    return best

def shelf_assignment(state: ExecutionState, 
        oracle, 
        penalty: int,
        match_assigned: bool = False) -> Tuple[int, int]:

    """
    Picks the next agent-shelf pair.

    Builds the waiting-delay matrix between free agents and released unassigned
    shelves, solves the min-cost matching and returns the matched pair with the
    smallest estimated start (ties: lower shelf id, then lower agent id).
    When no free agent matches, assigned agents are matched as well, giving up
    their current shelf. When every released shelf is already held, the holder
    whose shelf can start first is returned again.
    """

    released = [s for s in state.uncompleted() if state.release_time(s) != INF]

    if not released:

        raise InvariantViolation("no released shelf left", state.snapshot())

    unassigned = [s for s in released if state.shelf_agent[s] is None]

    agents = [a for a in range(state.N) 
        if match_assigned or state.assignment[a] is None]

    best = _best_matched_pair(agents, unassigned, state, oracle, penalty)

    if best is None and not match_assigned:

        best = _best_matched_pair(list(range(state.N)), unassigned, state, oracle, penalty)

    if best is None:

        held = [(t_hat_start(state.shelf_agent[s], s, state, oracle), s, state.shelf_agent[s]) 
            for s in released if state.shelf_agent[s] is not None
            and oracle.dist(state.a_current(state.shelf_agent[s]), state.s_current(s)) != UNREACHABLE]

        best = min(held, default=None)

    if best is None:

        raise InvariantViolation("no agent can reach a released shelf", state.snapshot())

    _, s, a = best

    state.assign(a, s)
    state.active[a] = True

    return a, s

class CrestTask(ExecutionTask):

    """ Constraint-release execution of a shelf plan.

    Each round assigns one agent-shelf pair, then repeatedly lets the active agent with
    the earliest available time carry its shelf along the currently unconstrained
    segment. Dependency switching and group replanning may release a constrained
    shelf; single trajectory replanning runs right before each carry.
    """

    method = "crest"

    def __init__(self, 
            inst: Instance, 
            plan: ShelfPlan,
            config: Optional[ExecutionConfig] = None,
            check_plan: bool = True,
            verbose: bool = False):

        super().__init__(inst, plan, config, check_plan, verbose)

        self.method = _method_name(self.config)

    def _execute(self):

        st = self.state
        cfg = self.config

        while st.uncompleted():

            self._rounds += 1

            with self._timer.measure("assignment"):

                a_star, _ = shelf_assignment(st, self.oracle, self.inst.unmatched_penalty, 
                                cfg.match_assigned_agents)

            fresh = {a_star}

            while True:

                pending = [a for a in range(st.N) if st.active[a] 
                    and st.assignment[a] is not None and not st.completed[st.assignment[a]]]

                if not pending:

                    break

                a = min(pending, key=lambda x: (st.t_avail(x), x))
                s = st.assignment[a]

                if self._ready(a, s, a in fresh):

                    fresh.discard(a)

                    if cfg.use_str:

                        with self._timer.measure("strategies"):

                            single_replan(s, st, self.oracle)

                    new_index = st.dg.new_index(s)

                    if new_index == st.dg.current[s]:

                        st.active[a] = False

                        continue

                    # no lift before s.next can be entered right after the overhead
                    t_rel = st.release_time(s)

                    self._carry(a, s, new_index, 
                        lift_earliest=max(st.phi_end(s), int(t_rel) - cfg.overhead))

                    if cfg.check_invariants:

                        self._check_acyclic()

                    for b in range(st.N):

                        if st.assignment[b] is not None:

                            st.active[b] = True

                else:

                    fresh.discard(a)
                    st.active[a] = False

            self._prune()

    def _ready(self, a: int, s: int, fresh: bool) -> bool:

        st = self.state
        cfg = self.config

        t_rel = st.release_time(s)

        if fresh and t_rel != INF:

            return True

        if t_rel <= st.t_avail(a) + 2 * cfg.overhead:

            return True

        if t_rel == INF and (cfg.use_ds or cfg.use_gtr):

            w = (s, st.dg.next_index(s))

            with self._timer.measure("strategies"):

                if cfg.use_ds and dep_switch(w, st, cfg.ds_depth_limit):

                    return True

                if cfg.use_gtr and group_replan(s, st, self.oracle):

                    return True

        return False

    def _check_acyclic(self):

        if not is_acyclic(self.state.dg):

            raise InvariantViolation("dependency graph became cyclic", self.state.snapshot())

def _method_name(config: ExecutionConfig) -> str:

    flags = [name for name, on in (("str", config.use_str), ("ds", config.use_ds), 
                                ("gtr", config.use_gtr)) if on]

    if len(flags) == 3:

        return "crest+all"

    return "+".join(["crest"] + flags)

def run_crest(inst: Instance, 
        plan: ShelfPlan, 
        config: Optional[ExecutionConfig] = None,
        verbose: bool = False) -> ExecutionResult:

    return CrestTask(inst, plan, config, verbose=verbose).run()
