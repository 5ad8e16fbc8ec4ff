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
from typing import List, Optional

import numpy as np

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.shelf_plan import ShelfPlan, validate_shelf_plan
from crest_ddmapd.envs.warehouse import DistanceOracle, Instance
from crest_ddmapd.planners.reservations import ReservationLayer
from crest_ddmapd.planners.sipp import sipp_search
from crest_ddmapd.utils.errors import InstanceError, PlannerFailure

class SeedPlanner:

    """ Prioritized planning of safe 1-robust shelf plans.

    Shelves are planned one at a time in a random priority order with SIPP on the grid
    minus the agent initial cells. Every planned trajectory reserves its cells widened by
    one step on both sides, which enforces 1-robustness in both priority directions,
    and holds its delivery forever. Shelves with p = d are held from the start, and the
    pickup of every shelf still waiting for its turn is kept clear for the first
    pickup_window steps so that it can leave. Unlike plain prioritized planning, where
    shelves not yet planned are no obstacles, those pickups are obstacles for that window.
    A failed order is retried with a fresh permutation.

    Args:
        inst (Instance): the instance
        seed (int): permutation seed
        restarts (int): extra attempts after the first
        pickup_window (int): steps during which pending pickups stay reserved
        verbose (bool): log the plan found
    """

    def __init__(self, 
            inst: Instance, 
            seed: int = 0, 
            restarts: int = 50,
            pickup_window: int = 2,
            verbose: bool = False):

        if pickup_window < 0:

            raise InstanceError(f"pickup_window must be non-negative, got {pickup_window}")

        self._inst = inst
        self._window = pickup_window
        self._rng = np.random.default_rng(seed)
        self._restarts = restarts
        self._verbose = verbose

        self._oracle = DistanceOracle(inst.map)

        self.attempts = 0
        self.blocking_shelf: Optional[int] = None

    def _attempt(self, order: List[int]) -> Optional[ShelfPlan]:

        inst = self._inst

        layer = ReservationLayer()
        forbidden = set(inst.agents)

        paths = [None] * inst.M

        for s, (p, d) in enumerate(inst.shelves):

            if p == d:

                layer.set_path(s, [p], 0, hold=True, margin=1)

                paths[s] = [p]

            else:

                layer.set_path(("pickup", s), [p] * (self._window + 1), 0, hold=False)

        for s in order:

            if paths[s] is not None:

                continue

            p, d = inst.shelves[s]

            layer.clear(("pickup", s))

            path = sipp_search(inst.map, self._oracle, p, 0, d,
                        intervals=layer.safe_intervals,
                        swap_blocked=layer.swap_blocked,
                        forbidden=forbidden)

            if path is None:

                self.blocking_shelf = s

                return None

            layer.set_path(s, path, 0, hold=True, margin=1)

            paths[s] = path

        return ShelfPlan.from_waypoints(paths)

    def plan(self) -> ShelfPlan:

        inst = self._inst

        for attempt in range(self._restarts + 1):

            self.attempts = attempt + 1

            order = [int(s) for s in self._rng.permutation(inst.M)]

            plan = self._attempt(order)

            if plan is None:

                continue

            validity = validate_shelf_plan(plan, inst)

            if validity.all_valid:

                if self._verbose:

                    Journal.log(self.__class__.__name__,
                        "plan",
                        f"plan found after {self.attempts} attempt(s), horizon {plan.horizon}",
                        LogType.INFO)

                return plan

            Journal.log(self.__class__.__name__,
                "plan",
                f"discarding invalid plan ({validity.failed()})",
                LogType.WARN)

        exception = f"no plan after {self.attempts} attempts, blocked on shelf {self.blocking_shelf}"

        Journal.log(self.__class__.__name__,
            "plan",
            exception,
            LogType.EXCEP,
            throw_when_excep = False)

        raise PlannerFailure(exception)

def plan_shelves_prioritized(inst: Instance, 
        seed: int = 0, 
        restarts: int = 50,
        verbose: bool = False) -> ShelfPlan:

    return SeedPlanner(inst, seed, restarts, verbose=verbose).plan()
