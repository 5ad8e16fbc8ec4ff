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
import numpy as np
import pytest

from crest_ddmapd.envs.shelf_plan import ShelfPlan, validate_shelf_plan
from crest_ddmapd.envs.warehouse import DistanceOracle, ExecutionConfig, Instance
from crest_ddmapd.tasks.crest_task import run_crest
from crest_ddmapd.tasks.execution_task import ExecutionState
from crest_ddmapd.tasks.strategies import (dep_switch, extract_mapf, group_replan, 
                                        single_replan, time_expanded_route)
from crest_ddmapd.utils.dep_graph import build_dep, is_acyclic
from crest_ddmapd.utils.validation import validate_execution

from crest_ddmapd.tests.conftest import scaled, seeded_case

def _state(inst, plan):

    assert validate_shelf_plan(plan, inst).all_valid

    return ExecutionState(inst, plan), DistanceOracle(inst.map)

@pytest.fixture
def corridor(open_grid):

    # shelf 1 waits below (1,3) for shelf 0, then carries on for a long way
    inst = Instance(open_grid(7, 3), agents=[(2, 0)], 
                shelves=[((1, 0), (0, 3)), ((2, 3), (0, 6))])

    plan = ShelfPlan.from_waypoints([[(1, 0), (1, 1), (1, 2), (1, 3), (0, 3)],
                                    [(2, 3)] * 5 + [(1, 3), (1, 4), (1, 5), (1, 6), (0, 6)]])

    return _state(inst, plan)

@pytest.fixture
def detour(open_grid):

    # shelf 0 takes the long way round through (1,2) and (2,2); shelf 1 waits for both
    inst = Instance(open_grid(5, 5), agents=[(4, 4)], 
                shelves=[((1, 1), (1, 3)), ((0, 2), (2, 2))])

    plan = ShelfPlan.from_waypoints([[(1, 1), (1, 2), (2, 2), (2, 3), (1, 3)],
                                    [(0, 2)] * 3 + [(1, 2), (2, 2)]])

    return _state(inst, plan)

@pytest.fixture
def long_tail(open_grid):

    # shelf 1 crosses (1,1) behind shelf 0, which still has a long way to go
    inst = Instance(open_grid(7, 3), agents=[(2, 0)], 
                shelves=[((1, 0), (0, 6)), ((2, 1), (0, 1))])

    plan = ShelfPlan.from_waypoints([[(1, 0), (1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (0, 6)],
                                    [(2, 1)] * 3 + [(1, 1), (0, 1)]])

    return _state(inst, plan)

@pytest.fixture
def example(example_instance, example_plan):

    return _state(example_instance, example_plan)

def test_reconstruction_of_fresh_state(example):

    state, _ = example

    recon = extract_mapf(state)

    assert recon.starts == {0: 0, 1: 0, 2: 0}
    assert [recon.arrival(s) for s in range(4)] == [3, 4, 1, 0]
    assert recon.horizon == 4

    # shelf 1 enters (2,3) once shelf 0 has moved on
    assert recon.timelines[1][:3] == [((1, 3), 0), ((1, 3), 0), ((2, 3), 1)]

def test_reconstruction_waits_for_the_holder(example):

    state, _ = example

    # agent 1 needs four steps to get beneath shelf 0
    state.assign(1, 0)

    assert state.estimate_starts() == {0: 4, 1: 0, 2: 0}

    recon = extract_mapf(state)

    assert recon.timelines[0][4:6] == [((2, 4), 0), ((2, 3), 1)]
    assert recon.arrival(0) == 7

def test_route_on_open_grid(open_grid):

    path = time_expanded_route(open_grid(3, 3), (0, 0), 0, (2, 2), [], [], horizon=10)

    assert path[0] == (0, 0) and path[-1] == (2, 2)
    assert len(path) == 5

def test_route_follows_a_leaving_timeline(open_grid):

    other = [((0, 1), 0), ((1, 1), 1), ((2, 1), 2)]

    path = time_expanded_route(open_grid(3, 3), (0, 0), 0, (0, 2), [other], [], horizon=10)

    assert path == [(0, 0), (0, 1), (0, 2)]

def test_route_to_a_held_goal_fails(open_grid):

    other = [((1, 2), 0), ((0, 2), 1)]

    assert time_expanded_route(open_grid(3, 3), (0, 0), 0, (0, 2), [other], [], horizon=12) is None

def test_route_waits_for_committed_visits(open_grid):

    settled = np.full((1, 3), -1)
    settled[0, 1] = 3

    path = time_expanded_route(open_grid(3, 1), (0, 0), 0, (0, 2), [], [], horizon=10, settled=settled)

    assert path == [(0, 0)] * 4 + [(0, 1), (0, 2)]

def test_route_avoids_forbidden_cells(open_grid):

    path = time_expanded_route(open_grid(3, 1), (0, 0), 0, (0, 2), [], [(0, 1)], horizon=10)

    assert path is None

def test_single_replan_keeps_shortest_route(example):

    state, oracle = example

    before = state.dg.copy()

    assert single_replan(0, state, oracle)

    assert state.dg.same_as(before)
    assert state.strategy_log[-1] == {"strategy": "STR", "shelf": 0, "accepted": True, "changed": False}

def test_single_replan_shortens_route(detour):

    state, oracle = detour

    assert single_replan(0, state, oracle)

    assert state.dg.waypoints[0] == [(1, 1), (1, 2), (1, 3)]
    assert is_acyclic(state.dg)
    assert not state.dg.constrained((0, 1))

    entry = state.strategy_log[-1]

    assert entry["changed"]
    assert (entry["arrival_before"], entry["arrival_after"]) == (4, 2)

def test_dep_switch_accepts_shorter_makespan(corridor):

    state, _ = corridor

    assert state.dg.constrained((1, 1))

    assert dep_switch((1, 1), state)

    assert not state.dg.constrained((1, 1))
    assert state.dg.g.has_edge((1, 2), (0, 3))
    assert not state.dg.g.has_edge((0, 4), (1, 1))
    assert is_acyclic(state.dg)

    entry = state.strategy_log[-1]

    assert entry["accepted"]
    assert (entry["makespan_before"], entry["makespan_after"]) == (8, 5)

def test_dep_switch_accepts_equal_makespan(example):

    state, _ = example

    assert dep_switch((1, 1), state)

    assert state.dg.g.has_edge((1, 2), (0, 1))
    assert not state.dg.g.has_edge((0, 2), (1, 1))

    entry = state.strategy_log[-1]

    assert (entry["makespan_before"], entry["makespan_after"]) == (4, 4)

def test_dep_switch_rejects_longer_makespan(long_tail):

    state, _ = long_tail

    before = state.dg.copy()

    assert not dep_switch((1, 1), state)

    assert state.dg.same_as(before)
    assert state.strategy_log[-1]["makespan_before"] == 7
    assert state.strategy_log[-1]["reason"] == "no acyclic switch"

def test_dep_switch_rejects_unresolvable_cycle(detour):

    state, _ = detour

    before = state.dg.copy()

    # letting shelf 1 pass (1,2) first would need shelf 0 to clear (2,2) after it
    assert not dep_switch((1, 1), state)

    assert state.dg.same_as(before)

def test_group_replan_frees_waypoint(detour):

    state, oracle = detour

    assert state.dg.constrained((1, 1))

    assert group_replan(1, state, oracle)

    assert not state.dg.constrained((1, 1))
    assert state.dg.waypoints[0][-1] == (1, 3)
    assert is_acyclic(state.dg)

    entry = state.strategy_log[-1]

    assert entry["accepted"] and entry["constraining"] == [0]
    assert entry["makespan_after"] <= entry["makespan_before"] == 4

def test_group_replan_rejects_late_detour(example):

    state, oracle = example

    before = state.dg.copy()

    assert not group_replan(1, state, oracle)

    assert state.dg.same_as(before)
    assert state.strategy_log[-1]["reason"] == "no replan for shelf 0"

def test_single_replan_starts_with_the_holder(example):

    state, oracle = example

    state.assign(1, 0)

    before = state.dg.copy()

    assert single_replan(0, state, oracle)

    # from t=4 the planned route is still the earliest one
    assert state.dg.same_as(before)
    assert not state.strategy_log[-1]["changed"]

def test_derive_arcs_rejects_passing_a_made_visit(open_grid):

    plan = ShelfPlan.from_waypoints([[(1, 0)] * 4 + [(1, 1), (1, 2)],
                                    [(0, 1), (0, 1), (1, 1), (2, 1)]])

    _, dg = build_dep(plan)

    dg.mark_traversed(1, 1, 2)
    dg.set_current(1, 1)

    later = [[((1, 0), 0)] * 4 + [((1, 1), 1), ((1, 2), 2)],
            [((0, 1), 0), ((0, 1), 0), ((1, 1), 1), ((2, 1), 2)]]

    assert dg.derive_arcs(0, later)
    assert dg.g.has_edge((1, 2), (0, 1))

    # shelf 0 would be at (1,1) before shelf 1 got there at t=2
    earlier = [[((1, 0), 0), ((1, 1), 1), ((1, 2), 2)], later[1]]

    assert not dg.copy().derive_arcs(0, earlier)

def test_group_replan_rejects_assigned_blocker(example):

    state, oracle = example

    state.assign(0, 0)

    assert not group_replan(1, state, oracle)
    assert state.strategy_log[-1]["reason"] == "shelf 0 assigned"

@pytest.mark.parametrize("flags", [dict(use_str=True), dict(use_ds=True), dict(use_gtr=True),
                                dict(use_str=True, use_ds=True, use_gtr=True)])
def test_strategy_runs_are_valid(flags):

    ran = 0

    for seed in range(scaled(10)):

        case = seeded_case(seed)

        if case is None:

            continue

        inst, plan = case

        result = run_crest(inst, plan, ExecutionConfig(check_invariants=True, **flags))

        report = validate_execution(result, inst, plan)

        assert report.precedence_checked == bool(result.arcs)
        assert report.clean, (seed, flags, report.violations[:3])

        ran += 1

    assert ran > 0
