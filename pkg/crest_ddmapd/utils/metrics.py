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
from dataclasses import asdict, dataclass

from typing import Dict, List

import pandas as pd

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.utils.errors import PlanError

@dataclass(frozen=True)
class MetricsReport:

    cost: int # sum of |pi_a|
    norm_cost: int
    makespan: int
    norm_mksp: float
    switch_per_shelf: float
    runtime_s: float
    travel_cost: int
    carry_cost: int
    overhead_cost: int
    lifts: int
    rearranged: int
    runtime_per_shelf: float
    runtime_per_shelf_step: float
    runtime_per_agent_step: float

    def as_dict(self) -> Dict[str, float]:

        return asdict(self)

def compute_metrics(result, plan: ShelfPlan, N: int) -> MetricsReport:

    """
    Quality and runtime figures of one execution.

    Parameters:
        result (ExecutionResult): committed paths and lift/place events
        plan (ShelfPlan): the ORIGINAL timestep-indexed plan the run executed
        N (int): number of agents
    Returns:
        report (MetricsReport)
    """

    if plan.simplified:

        raise PlanError("normalization needs the unsimplified plan")

    if len(result.shelf_paths) != plan.M:

        raise PlanError(f"result has {len(result.shelf_paths)} shelves, plan has {plan.M}")

    lengths = [max(len(p) - 1, 0) for p in result.agent_paths]

    cost = sum(lengths)
    makespan = max(lengths, default=0)

    tau = plan.total_length

    rearranged = sum(1 for t in plan if t.waypoints[0] != t.waypoints[-1])

    lifts = result.lifts()
    places = result.places()

    # each carry holds the shelf from the lift until the place is over
    carry_cost = sum(tp + result.overhead - tl for (_, _, tl), (_, _, tp) in zip(lifts, places))

    runtime = result.runtime_s

    return MetricsReport(cost=cost,
            norm_cost=cost - tau,
            makespan=makespan,
            norm_mksp=makespan - tau / N,
            switch_per_shelf=len(places) / rearranged if rearranged else 0.0,
            runtime_s=runtime,
            travel_cost=cost - carry_cost,
            carry_cost=carry_cost,
            overhead_cost=result.overhead * (len(lifts) + len(places)),
            lifts=len(lifts),
            rearranged=rearranged,
            runtime_per_shelf=runtime / rearranged if rearranged else 0.0,
            runtime_per_shelf_step=runtime / tau if tau else 0.0,
            runtime_per_agent_step=runtime / cost if cost else 0.0)

_REDUCTIONS = {"red_norm_cost": "norm_cost", 
            "red_norm_mksp": "norm_mksp", 
            "red_switch": "switch_per_shelf"}

_INSTANCE_KEYS = ["map", "kind", "seed", "N", "M"]

def reduction_vs(df: pd.DataFrame, baseline: str = "baseline") -> pd.DataFrame:

    """ Adds percentage reductions relative to the baseline row of the same instance. """

    out = df.copy()

    for col in _REDUCTIONS:

        out[col] = float("nan")

    if out.empty or baseline not in set(out["method"]):

        return out

    base = out[out["method"] == baseline].set_index(_INSTANCE_KEYS)

    for col, metric in _REDUCTIONS.items():

        ref = out.join(base[[metric]].rename(columns={metric: "_ref"}), on=_INSTANCE_KEYS)["_ref"]

        # undefined where the baseline value is zero
        ref = ref.where(ref != 0)

        out[col] = 100.0 * (ref - out[metric]) / ref.abs()

    return out

def summarize(df: pd.DataFrame, metrics: List[str] = None) -> pd.DataFrame:

    """ Mean and standard deviation of each metric per (kind, method). """

    if metrics is None:

        metrics = [c for c in df.columns 
            if c not in _INSTANCE_KEYS + ["method", "valid", "timeout"] and pd.api.types.is_numeric_dtype(df[c])]

    return df.groupby(["kind", "method"], sort=True)[metrics].agg(["mean", "std"])
