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

from crest_ddmapd.envs.warehouse import Cell, Instance
from crest_ddmapd.utils.errors import PlanError

@dataclass(frozen=True)
class ShelfTrajectory:

    shelf: int
    waypoints: Tuple[Cell, ...]

    def __post_init__(self):

        object.__setattr__(self, "waypoints", tuple(tuple(c) for c in self.waypoints))

        if not self.waypoints:

            raise PlanError(f"shelf {self.shelf} has an empty trajectory")

    def __len__(self) -> int:

        return len(self.waypoints)

    @property
    def end_time(self) -> int:

        # |tau_s| under the end-time convention

        return len(self.waypoints) - 1

    def at(self, k: int) -> Cell:

        # waits at its last waypoint forever

        return self.waypoints[min(k, len(self.waypoints) - 1)]

@dataclass(frozen=True)
class ShelfPlan:

    trajectories: Tuple[ShelfTrajectory, ...]
    simplified: bool = False

    def __post_init__(self):

        object.__setattr__(self, "trajectories", tuple(self.trajectories))

        for s, traj in enumerate(self.trajectories):

            if traj.shelf != s:

                raise PlanError(f"trajectory at position {s} belongs to shelf {traj.shelf}")

    @classmethod
    def from_waypoints(cls, 
            waypoints: Sequence[Sequence[Cell]], 
            simplified: bool = False) -> "ShelfPlan":

        return cls(tuple(ShelfTrajectory(s, tuple(w)) for s, w in enumerate(waypoints)),
                simplified=simplified)

    @property
    def M(self) -> int:

        return len(self.trajectories)

    def __getitem__(self, s: int) -> ShelfTrajectory:

        return self.trajectories[s]

    def __iter__(self):

        return iter(self.trajectories)

    @property
    def horizon(self) -> int:

        return max((t.end_time for t in self.trajectories), default=0)

    @property
    def total_length(self) -> int:

        return sum(t.end_time for t in self.trajectories)

    def waypoint_lists(self) -> List[List[Cell]]:

        return [list(t.waypoints) for t in self.trajectories]

    def replace_trajectory(self, s: int, waypoints: Sequence[Cell]) -> "ShelfPlan":

        trajs = list(self.trajectories)
        trajs[s] = ShelfTrajectory(s, tuple(waypoints))

        return ShelfPlan(tuple(trajs), simplified=self.simplified)

@dataclass
class PlanValidity:

    collision_free: bool = True
    edge_swap_free: bool = True
    safe: bool = True
    one_robust: bool = True
    endpoints_correct: bool = True
    continuous: bool = True
    witnesses: Dict[str, tuple] = field(default_factory=dict)

    @property
    def all_valid(self) -> bool:

        return (self.collision_free and self.edge_swap_free and self.safe 
            and self.one_robust and self.endpoints_correct and self.continuous)

    def failed(self) -> List[str]:

        names = ("collision_free", "edge_swap_free", "safe", 
            "one_robust", "endpoints_correct", "continuous")

        return [n for n in names if not getattr(self, n)]

    def _fail(self, name: str, witness: tuple):

        if getattr(self, name):

            setattr(self, name, False)
            self.witnesses[name] = witness

def validate_shelf_plan(plan: ShelfPlan, 
        inst: Instance,
        exempt_safe_prefix: Optional[Sequence[int]] = None) -> PlanValidity:

    """
    Checks a timestep-indexed shelf plan.

    Parameters:
        plan (ShelfPlan): unsimplified plan, one trajectory per instance shelf
        inst (Instance): the instance
        exempt_safe_prefix (Sequence[int]): optional per-shelf count of leading
            waypoints excluded from the safeness check (already executed prefixes)
    Returns:
        report (PlanValidity): independent flags, first witness for each failed flag
    """

    if plan.M != inst.M:

        raise PlanError(f"plan has {plan.M} trajectories, instance has {inst.M} shelves")

    report = PlanValidity()

    starts = set(inst.agents)

    for s, traj in enumerate(plan):

        p, d = inst.shelves[s]

        if traj.waypoints[0] != p or traj.waypoints[-1] != d:

            report._fail("endpoints_correct", (s, traj.waypoints[0], traj.waypoints[-1]))

        skip = exempt_safe_prefix[s] if exempt_safe_prefix is not None else 0

        for k, cell in enumerate(traj.waypoints):

            if not inst.map.is_free(cell):

                report._fail("continuous", (s, k, cell))

            if k >= skip and cell in starts:

                report._fail("safe", (s, k, cell))

            if k > 0:

                prev = traj.waypoints[k - 1]

                if prev != cell and not inst.map.adjacent(prev, cell):

                    report._fail("continuous", (s, k, cell))

    horizon = plan.horizon

    occupancy: List[Dict[Cell, int]] = []

    for t in range(horizon + 1):

        occ: Dict[Cell, int] = {}

        for s, traj in enumerate(plan):

            cell = traj.at(t)

            if cell in occ:

                report._fail("collision_free", (occ[cell], s, t))

            else:

                occ[cell] = s

        occupancy.append(occ)

    for t in range(horizon):

        occ, nxt = occupancy[t], occupancy[t + 1]

        for s, traj in enumerate(plan):

            here, there = traj.at(t), traj.at(t + 1)

            other = occ.get(there)

            if other is not None and other != s:

                # tau_s(t+1) == tau_s'(t)
                report._fail("one_robust", (s, other, t))

                if here != there and nxt.get(here) == other:

                    report._fail("edge_swap_free", (s, other, t))

    return report

def simplify_plan(plan: ShelfPlan) -> ShelfPlan:

    # collapses runs of repeated waypoints; indices stop meaning timesteps

    return ShelfPlan(tuple(ShelfTrajectory(traj.shelf, tuple(cell for cell, _ in groupby(traj.waypoints)))
                        for traj in plan),
                simplified=True)
