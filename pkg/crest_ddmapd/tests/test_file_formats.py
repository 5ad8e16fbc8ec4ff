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
import dataclasses

import numpy as np
import pytest

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import ExecutionConfig, Instance
from crest_ddmapd.tasks.crest_task import run_crest
from crest_ddmapd.utils.errors import ParseError
from crest_ddmapd.utils.file_formats import (load_execution_log, load_instance, load_plan, parse_map, 
                                        parse_plan, parse_scenario, read_execution_log, save_execution_log,
                                        save_instance, save_plan, write_execution_log, write_map, 
                                        write_plan, write_scenario)
from crest_ddmapd.utils.validation import validate_execution

def test_example_scenario(example_instance):

    assert example_instance.agents == ((1, 4), (1, 1))
    assert example_instance.M == 4
    assert example_instance.shelves[0] == ((2, 4), (3, 2))
    assert example_instance.shelves[3] == ((0, 0), (0, 0))

def test_scenario_comments_and_blank_lines(open_grid):

    text = "# generated\n\nddmapd 1\nagent 0 0   # first agent\n\nshelf 1 1 2 2\n"

    inst = parse_scenario(text, open_grid(3, 3))

    assert inst.agents == ((0, 0),)
    assert inst.shelves == (((1, 1), (2, 2)),)

def test_scenario_config_is_attached(open_grid):

    inst = parse_scenario("ddmapd 1\nagent 0 0\nshelf 1 1 2 2\n", open_grid(3, 3), ExecutionConfig(overhead=3))

    assert inst.config.overhead == 3

def test_scenario_missing_header(open_grid):

    with pytest.raises(ParseError) as err:

        parse_scenario("agent 0 0\n", open_grid(3, 3))

    assert err.value.line == 1

def test_scenario_error_names_line(open_grid):

    with pytest.raises(ParseError) as err:

        parse_scenario("ddmapd 1\nagent 0 0\nagent 1\n", open_grid(3, 3), source="w.scen")

    assert err.value.line == 3
    assert str(err.value) == "w.scen:3: malformed 'agent' line"

def test_scenario_non_integer(open_grid):

    with pytest.raises(ParseError, match="line 2: expected integers"):

        parse_scenario("ddmapd 1\nagent 0 x\n", open_grid(3, 3))

def test_scenario_written_and_read(example_instance):

    inst = parse_scenario(write_scenario(example_instance), example_instance.map)

    assert inst.agents == example_instance.agents
    assert inst.shelves == example_instance.shelves

def test_map_written_and_read(open_grid):

    grid = open_grid(4, 3, walls=[(1, 1), (2, 3)])

    again = parse_map(write_map(grid))

    assert np.array_equal(again.blocked, grid.blocked)

def test_example_plan(example_plan):

    assert example_plan.M == 4
    assert example_plan[1].waypoints[:4] == ((1, 3), (1, 3), (1, 3), (2, 3))
    assert not example_plan.simplified

def test_plan_written_and_read(example_plan):

    assert parse_plan(write_plan(example_plan)).waypoint_lists() == example_plan.waypoint_lists()

@pytest.mark.parametrize("text, line", [("", 1),
                                        ("ddmapd-plan 1\n", 1),
                                        ("ddmapd-plan 1 2\ntraj 0 1 0 0\n", 2),
                                        ("ddmapd-plan 1 1\ntraj 0 2 0 0\n", 2),
                                        ("ddmapd-plan 1 1\ntraj 3 1 0 0\n", 2),
                                        ("ddmapd-plan 1 2\ntraj 0 1 0 0\ntraj 0 1 1 1\n", 3),
                                        ("ddmapd-plan 1 1\npath 0 1 0 0\n", 2)])
def test_plan_errors(text, line):

    with pytest.raises(ParseError) as err:

        parse_plan(text)

    assert err.value.line == line

@pytest.fixture
def single_run(open_grid):

    inst = Instance(open_grid(5, 5), agents=[(0, 0)], shelves=[((0, 2), (3, 2))])
    plan = ShelfPlan.from_waypoints([[(0, 2), (1, 2), (2, 2), (3, 2)]])

    return inst, plan, run_crest(inst, plan, ExecutionConfig(overhead=1))

def test_execution_log_read_back(single_run):

    inst, plan, result = single_run

    back = read_execution_log(write_execution_log(result))

    assert back.method == "crest"
    assert back.overhead == 1
    assert back.agent_paths == result.agent_paths
    assert back.shelf_paths == result.shelf_paths
    assert back.shelf_indices == result.shelf_indices
    assert back.dummies == result.dummies
    assert back.events == result.events

    assert validate_execution(back, inst, plan).clean

def test_execution_log_header_lines(single_run):

    _, _, result = single_run

    lines = write_execution_log(result).splitlines()

    assert lines[:3] == ["ddmapd-log 1", "meta method crest", "meta overhead 1"]
    assert "lift 0 0 2" in lines
    assert "place 0 0 6" in lines

def test_execution_log_keeps_arcs(single_run):

    _, _, result = single_run

    result = dataclasses.replace(result, arcs=[((1, 2), (0, 1)), ((2, 1), (1, 3))])

    text = write_execution_log(result)

    assert "arc 1 2 0 1" in text.splitlines()
    assert read_execution_log(text).arcs == result.arcs

@pytest.mark.parametrize("text", ["ddmapd-log 1\nteleport 0 0 1\n",
                                "ddmapd-log 1\nlift 0 0\n",
                                "ddmapd-log 1\narc 0 1 1\n",
                                "ddmapd-log 1\nwp 0 3 0 1\n",
                                "ddmapd-log 1\npath 0 2 0 0 0\n",
                                "ddmapd-log 1\nmeta overhead\n"])
def test_execution_log_errors(text):

    with pytest.raises(ParseError) as err:

        read_execution_log(text, source="run.log")

    assert str(err.value).startswith("run.log:2:")

def test_execution_log_needs_header():

    with pytest.raises(ParseError):

        read_execution_log("meta method crest\n")

def test_files(tmp_path, example_instance, example_plan, single_run):

    save_instance(example_instance, tmp_path / "w.map", tmp_path / "w.scen")
    save_plan(example_plan, tmp_path / "w.plan")

    inst = load_instance(tmp_path / "w.map", tmp_path / "w.scen")

    assert inst.shelves == example_instance.shelves
    assert load_plan(tmp_path / "w.plan").waypoint_lists() == example_plan.waypoint_lists()

    _, _, result = single_run

    save_execution_log(result, tmp_path / "run.log")

    assert load_execution_log(tmp_path / "run.log").events == result.events
