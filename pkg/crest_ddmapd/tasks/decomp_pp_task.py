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
from typing import Optional

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import UNREACHABLE, ExecutionConfig, Instance
from crest_ddmapd.tasks.execution_task import ExecutionResult, ExecutionTask
from crest_ddmapd.utils.dep_graph import INF
from crest_ddmapd.utils.errors import InvariantViolation

class DecompPPTask(ExecutionTask):

    """ Reactive decomposition baseline with a prioritized single-agent planner.

    Agents act in order of their decision time. A free agent takes the nearest shelf
    whose next segment is released at that time (ties: lower shelf id) and carries it
    forward only, without waits or backward moves, up to the last waypoint already
    released at the decision time. Agents without a released shelf idle until the next
    traversal, shelf path end or agent availability. Every carry is one task: the agent
    is free again once it places the shelf.
    """

    method = "baseline"

    def __init__(self, 
            inst: Instance, 
            plan: ShelfPlan,
            config: Optional[ExecutionConfig] = None,
            check_plan: bool = True,
            verbose: bool = False):

        super().__init__(inst, plan, config, check_plan, verbose)

        if self.config.any_strategy:

            self.config = self.config.with_strategies(False, False, False)
            self.inst = self.inst.with_config(self.config)

    def _released_segment(self, s: int, T: int) -> int:

        # last waypoint reachable with every predecessor already passed by T

        dg = self.state.dg

        k = dg.current[s]

        while k < dg.last_index(s) and dg.earliest_arrival((s, k + 1)) <= T:

            k += 1

        return k

    def _next_event(self, T: int) -> int:

        st = self.state

        times = [t for t in st.dg.traversal.values() if t > T]
        times += [st.phi_end(s) for s in range(st.M) if st.phi_end(s) > T]
        times += [st.t_avail(a) for a in range(st.N) if st.t_avail(a) > T]

        return min(times) if times else T + 1

    def _execute(self):

        st = self.state

        decide = [0] * st.N

        while st.uncompleted():

            a = min(range(st.N), key=lambda x: (decide[x], x))
            T = decide[a]

            best = None

            for s in st.uncompleted():

                if st.shelf_agent[s] is not None:

                    continue

                if st.release_time(s) > T or self._released_segment(s, T) == st.dg.current[s]:

                    continue

                d = self.oracle.dist(st.a_current(a), st.s_current(s))

                if d == UNREACHABLE:

                    continue

                if best is None or (d, s) < best:

                    best = (d, s)

            if best is None:

                if T > st.res.horizon + 1:

                    # every release time is known by now
                    raise InvariantViolation("baseline found no released shelf", st.snapshot())

                decide[a] = self._next_event(T)

                continue

            _, s = best

            self._rounds += 1

            st.assign(a, s)

            with self._timer.measure("assignment"):

                new_index = self._released_segment(s, T)

            self._carry(a, s, new_index, 
                lift_earliest=max(st.phi_end(s), T), 
                forward_only=True)

            st.release_agent(a)

            decide[a] = max(st.t_avail(a), T)

            self._prune()

def run_decomp_pp(inst: Instance, 
        plan: ShelfPlan, 
        config: Optional[ExecutionConfig] = None,
        verbose: bool = False) -> ExecutionResult:

    return DecompPPTask(inst, plan, config, verbose=verbose).run()
