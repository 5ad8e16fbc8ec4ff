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
import pytest

from crest_ddmapd.envs.shelf_plan import ShelfPlan, simplify_plan, validate_shelf_plan
from crest_ddmapd.envs.warehouse import Instance
from crest_ddmapd.utils.errors import PlanError

def _inst(grid, agents, shelves):

    return Instance(grid, agents, shelves)

def test_stationary_shelf_passes(open_grid):

    inst = _inst(open_grid(3, 3), [(0, 0)], [((1, 1), (1, 1))])

    report = validate_shelf_plan(ShelfPlan.from_waypoints([[(1, 1)]]), inst)

    assert report.all_valid
    assert report.failed() == []

def test_example_plan_is_valid(example_instance, example_plan):

    assert validate_shelf_plan(example_plan, example_instance).all_valid

def test_vertex_collision_witness(open_grid):

    inst = _inst(open_grid(4, 4), [(3, 3)], [((0, 0), (0, 2)), ((1, 1), (0, 1))])

    plan = ShelfPlan.from_waypoints([[(0, 0), (0, 1), (0, 2)], 
                                    [(1, 1), (0, 1)]])

    report = validate_shelf_plan(plan, inst)

    assert not report.collision_free
    assert report.witnesses["collision_free"] == (0, 1, 1)

def test_one_robustness_is_independent_of_collisions(open_grid):

    # shelf 1 enters (0,1) right after shelf 0 leaves it
    inst = _inst(open_grid(4, 4), [(3, 3)], [((0, 1), (0, 2)), ((1, 1), (0, 1))])

    plan = ShelfPlan.from_waypoints([[(0, 1), (0, 2)], 
                                    [(1, 1), (0, 1)]])

    report = validate_shelf_plan(plan, inst)

    assert report.collision_free
    assert report.edge_swap_free
    assert not report.one_robust
    assert report.witnesses["one_robust"] == (1, 0, 0)

def test_edge_swap(open_grid):

    inst = _inst(open_grid(3, 3), [(2, 2)], [((0, 0), (0, 1)), ((0, 1), (0, 0))])

    plan = ShelfPlan.from_waypoints([[(0, 0), (0, 1)], [(0, 1), (0, 0)]])

    report = validate_shelf_plan(plan, inst)

    assert not report.edge_swap_free
    assert not report.one_robust

def test_unsafe_and_wrong_endpoints(open_grid):

    inst = _inst(open_grid(3, 3), [(1, 1)], [((0, 0), (2, 2))])

    plan = ShelfPlan.from_waypoints([[(0, 0), (1, 0), (1, 1), (2, 1)]])

    report = validate_shelf_plan(plan, inst)

    assert not report.safe
    assert report.witnesses["safe"] == (0, 2, (1, 1))
    assert not report.endpoints_correct
    assert report.continuous

def test_teleport_is_discontinuous(open_grid):

    inst = _inst(open_grid(3, 3), [(1, 1)], [((0, 0), (2, 2))])

    report = validate_shelf_plan(ShelfPlan.from_waypoints([[(0, 0), (2, 2)]]), inst)

    assert not report.continuous

def test_count_mismatch_is_structural(open_grid):

    inst = _inst(open_grid(3, 3), [(1, 1)], [((0, 0), (2, 2))])

    with pytest.raises(PlanError):

        validate_shelf_plan(ShelfPlan.from_waypoints([[(0, 0)], [(2, 2)]]), inst)

def test_padding_detects_collision_after_arrival(open_grid):

    # shelf 0 rests at (0,1) from t=1, shelf 1 arrives there at t=3
    inst = _inst(open_grid(4, 4), [(3, 3)], [((0, 0), (0, 1)), ((2, 1), (0, 2))])

    plan = ShelfPlan.from_waypoints([[(0, 0), (0, 1)], 
                                    [(2, 1), (2, 2), (1, 2), (0, 2)]])

    assert validate_shelf_plan(plan, inst).all_valid

    bad = plan.replace_trajectory(1, [(2, 1), (1, 1), (0, 1), (0, 2)])

    assert not validate_shelf_plan(bad, inst).collision_free

def test_simplify_collapses_runs():

    a, b, c = (0, 0), (0, 1), (0, 2)

    plan = ShelfPlan.from_waypoints([[a, a, b, b, b, c]])

    simple = simplify_plan(plan)

    assert simple.simplified
    assert list(simple[0].waypoints) == [a, b, c]

def test_simplify_is_idempotent_and_keeps_endpoints(example_plan):

    once = simplify_plan(example_plan)
    twice = simplify_plan(once)

    assert once.waypoint_lists() == twice.waypoint_lists()

    for orig, simple in zip(example_plan, once):

        assert simple.waypoints[0] == orig.waypoints[0]
        assert simple.waypoints[-1] == orig.waypoints[-1]
        assert set(simple.waypoints) == set(orig.waypoints)
        assert len(simple) <= len(orig)

    # shelf 1 waits twice at its pickup
    assert len(once[1]) == len(example_plan[1]) - 2

def test_trajectory_padding():

    plan = ShelfPlan.from_waypoints([[(0, 0), (0, 1)]])

    assert plan[0].end_time == 1
    assert plan[0].at(7) == (0, 1)
    assert plan.horizon == 1
    assert plan.total_length == 1
