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
import os

from pathlib import Path

import numpy as np
import pytest

from crest_ddmapd.envs.warehouse import ExecutionConfig, GridMap, Instance
from crest_ddmapd.planners.seed_planner import plan_shelves_prioritized
from crest_ddmapd.utils.errors import CrestError
from crest_ddmapd.utils.file_formats import load_instance, load_plan
from crest_ddmapd.utils.layouts import LayoutSpec, generate_instance

CFG_DIR = Path(__file__).resolve().parent.parent / "cfg"

def fuzz_scale() -> float:

    # CREST_FUZZ_SCALE=1 runs the property suites at full size

    return float(os.environ.get("CREST_FUZZ_SCALE", "0.1"))

def scaled(n: int) -> int:

    return max(1, int(round(n * fuzz_scale())))

def pytest_configure(config):

    config.addinivalue_line("markers", "bench: heavy property and benchmark suites")

@pytest.fixture
def cfg_dir() -> Path:

    return CFG_DIR

@pytest.fixture
def example_instance() -> Instance:

    return load_instance(CFG_DIR / "example.map", CFG_DIR / "example.scen")

@pytest.fixture
def example_plan():

    return load_plan(CFG_DIR / "example.plan")

@pytest.fixture
def open_grid():

    def make(width: int = 5, height: int = 5, walls=()) -> GridMap:

        blocked = np.zeros((height, width), dtype=bool)

        for cell in walls:

            blocked[cell] = True

        return GridMap(blocked)

    return make

def seeded_case(seed: int, 
        size: int = 10, 
        agents: int = 3, 
        density: float = 0.15,
        kind: str = "r2r",
        config: ExecutionConfig = None):

    """ Well-formed generated instance with its seed plan, None when no plan is found. """

    spec = LayoutSpec(kind=kind, width=size, height=size, density=density, agents=agents, seed=seed)

    inst = generate_instance(spec, config)

    try:

        plan = plan_shelves_prioritized(inst, seed=seed, restarts=50)

    except CrestError:

        return None

    return inst, plan

@pytest.fixture
def random_case():

    return seeded_case
