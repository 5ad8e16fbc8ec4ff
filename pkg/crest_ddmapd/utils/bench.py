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
import math
import time

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from multiprocess import Pool, TimeoutError
from pathlib import Path

from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.warehouse import ExecutionConfig, Instance
from crest_ddmapd.planners.seed_planner import plan_shelves_prioritized
from crest_ddmapd.tasks.crest_task import run_crest
from crest_ddmapd.tasks.decomp_pp_task import run_decomp_pp
from crest_ddmapd.utils.errors import BudgetExceeded, CrestError, InfeasibleSpec, ParseError
from crest_ddmapd.utils.layouts import LayoutSpec, generate_instance
from crest_ddmapd.utils.metrics import compute_metrics, reduction_vs
from crest_ddmapd.utils.validation import validate_execution

BASE_COLUMNS = ["map", "kind", "seed", "N", "M", "method", "cost", "norm_cost", "makespan", 
    "norm_mksp", "switch_per_shelf", "runtime_s", "valid", "timeout"]

EXTRA_COLUMNS = ["travel_cost", "carry_cost", "runtime_per_shelf", 
    "red_norm_cost", "red_norm_mksp", "red_switch"]

COLUMNS = BASE_COLUMNS + EXTRA_COLUMNS

_TIMING = ("runtime_s", "runtime_per_shelf")

# name -> (strategy toggles STR, DS, GTR); None runs the baseline
METHODS: Dict[str, Optional[Tuple[bool, bool, bool]]] = {
    "baseline": None,
    "crest": (False, False, False),
    "crest+str": (True, False, False),
    "crest+ds": (False, True, False),
    "crest+gtr": (False, False, True),
    "crest+all": (True, True, True),
}

@dataclass(frozen=True)
class BenchCase:

    spec: LayoutSpec
    methods: Tuple[str, ...] = ("baseline", "crest", "crest+all")
    overhead: int = 0
    restarts: int = 50
    ds_depth_limit: int = 5

    @property
    def map_name(self) -> str:

        return f"{self.spec.name}-o{self.overhead}"

    def config(self, method: str) -> ExecutionConfig:

        toggles = METHODS[method] or (False, False, False)

        return ExecutionConfig(overhead=self.overhead, ds_depth_limit=self.ds_depth_limit).with_strategies(*toggles)

@dataclass
class Suite:

    cases: List[BenchCase] = field(default_factory=list)
    jobs: int = 1
    budget_s: float = 10000.0

def execute_method(inst: Instance, plan, method: str, config: ExecutionConfig):

    if method not in METHODS:

        raise CrestError(f"unknown method {method!r}, expected one of {list(METHODS)}")

    runner = run_decomp_pp if METHODS[method] is None else run_crest

    return runner(inst, plan, config)

def _row(case: BenchCase, method: str, N: int, M: int) -> Dict:

    row = {c: math.nan for c in COLUMNS}

    row.update(map=case.map_name, kind=case.spec.kind, seed=case.spec.seed, 
        N=N, M=M, method=method, valid=False, timeout=False)

    return row

def run_case(case: BenchCase, budget_s: float = math.inf) -> List[Dict]:

    """ Generates, seed-plans and executes one instance with every method of the case. """

    rows = []

    try:

        inst = generate_instance(case.spec)
        plan = plan_shelves_prioritized(inst, seed=case.spec.seed, restarts=case.restarts)

    except CrestError as e:

        Journal.log("Bench",
            "run_case",
            f"{case.map_name}: skipped ({e})",
            LogType.WARN)

        return [_row(case, m, case.spec.agents, -1) for m in case.methods]

    start = time.perf_counter()

    for method in case.methods:

        row = _row(case, method, inst.N, inst.M)

        if time.perf_counter() - start > budget_s:

            row["timeout"] = True
            rows.append(row)

            continue

        try:

            result = execute_method(inst, plan, method, case.config(method))

        except CrestError as e:

            Journal.log("Bench",
                "run_case",
                f"{case.map_name} [{method}]: {e}",
                LogType.WARN)

            rows.append(row)

            continue

        report = compute_metrics(result, plan, inst.N)

        row.update({k: v for k, v in report.as_dict().items() if k in row})
        row["valid"] = validate_execution(result, inst, plan).clean
        row["timeout"] = time.perf_counter() - start > budget_s

        rows.append(row)

    return rows

def _timed_out(case: BenchCase) -> List[Dict]:

    rows = [_row(case, m, case.spec.agents, -1) for m in case.methods]

    for row in rows:

        row["timeout"] = True

    return rows

def run_benchmark(suite: Union[Suite, Sequence[BenchCase]], 
        jobs: Optional[int] = None,
        budget_s: Optional[float] = None,
        timing: bool = True) -> pd.DataFrame:

    """
    Runs every case and assembles the result table.

    Parameters:
        suite (Suite | Sequence[BenchCase]): cases plus default jobs and budget
        jobs (int): worker processes; 1 runs inline
        budget_s (float): wall-clock budget per instance; exceeded rows are flagged, not dropped
        timing (bool): keep wall-clock columns (zeroed otherwise, for reproducible tables)
    Returns:
        table (pd.DataFrame): one row per (instance, method), columns COLUMNS
    """

    if not isinstance(suite, Suite):

        suite = Suite(cases=list(suite))

    jobs = suite.jobs if jobs is None else jobs
    budget_s = suite.budget_s if budget_s is None else budget_s

    rows: List[Dict] = []

    if jobs <= 1 or len(suite.cases) <= 1:

        for case in suite.cases:

            rows.extend(run_case(case, budget_s))

    else:

        with Pool(processes=jobs) as pool:

            pending = [(case, pool.apply_async(run_case, (case, budget_s))) for case in suite.cases]

            for case, handle in pending:

                # later cases kept running while earlier ones were awaited
                try:

                    rows.extend(handle.get(timeout=budget_s))

                except TimeoutError:

                    Journal.log("Bench",
                        "run_benchmark",
                        str(BudgetExceeded(f"{case.map_name} exceeded {budget_s} s")),
                        LogType.WARN)

                    rows.extend(_timed_out(case))

            pool.terminate()

    df = pd.DataFrame(rows, columns=COLUMNS)

    if not timing:

        for col in _TIMING:

            df[col] = 0.0

    df = reduction_vs(df)

    return df[COLUMNS]

def write_csv(df: pd.DataFrame, path: Union[str, Path]):

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    df.to_csv(path, index=False, float_format="%.6g")

def _seeds(value) -> List[int]:

    if isinstance(value, int):

        return list(range(value))

    return [int(s) for s in value]

def load_suite(path: Union[str, Path]) -> Suite:

    """
    Reads a benchmark suite.

    The [suite] table holds jobs, budget_s, methods, overheads and restarts; every
    [[layouts]] entry holds the LayoutSpec fields with `seeds` either a count or a list.
    """

    with open(path, "rb") as f:

        try:

            data = tomllib.load(f)

        except tomllib.TOMLDecodeError as e:

            raise ParseError(str(e), source=str(path)) from None

    head = data.get("suite", {})

    methods = tuple(head.get("methods", ("baseline", "crest", "crest+all")))

    unknown = [m for m in methods if m not in METHODS]

    if unknown:

        raise InfeasibleSpec(f"unknown methods in suite: {unknown}")

    overheads = head.get("overheads", [0])

    cases = []

    for layout in data.get("layouts", []):

        layout = dict(layout)
        seeds = _seeds(layout.pop("seeds", 1))

        try:

            specs = [LayoutSpec(seed=seed, **layout) for seed in seeds]

        except TypeError as e:

            raise InfeasibleSpec(f"bad layout entry {layout}: {e}") from None

        for overhead in overheads:

            for spec in specs:

                cases.append(BenchCase(spec=spec,
                            methods=methods,
                            overhead=int(overhead),
                            restarts=int(head.get("restarts", 50)),
                            ds_depth_limit=int(head.get("ds_depth_limit", 5))))

    return Suite(cases=cases, 
            jobs=int(head.get("jobs", 1)), 
            budget_s=float(head.get("budget_s", 10000.0)))
