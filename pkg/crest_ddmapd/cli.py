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
import argparse
import sys

from pathlib import Path

from typing import Optional, Sequence

from crest_ddmapd.envs.shelf_plan import validate_shelf_plan
from crest_ddmapd.envs.warehouse import ExecutionConfig, check_well_formed
from crest_ddmapd.planners.seed_planner import plan_shelves_prioritized
from crest_ddmapd.tasks.crest_task import run_crest
from crest_ddmapd.tasks.decomp_pp_task import run_decomp_pp
from crest_ddmapd.utils import file_formats as ff
from crest_ddmapd.utils.bench import load_suite, run_benchmark, write_csv
from crest_ddmapd.utils.dep_graph import build_dep
from crest_ddmapd.utils.errors import (CrestError, InstanceError, InfeasibleSpec, ParseError,
                                        PlannerFailure)
from crest_ddmapd.utils.layouts import KINDS, LayoutSpec, generate_instance
from crest_ddmapd.utils.metrics import compute_metrics
from crest_ddmapd.utils.validation import validate_execution

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PLAN_FAILED = 2
EXIT_USAGE = 64
EXIT_IO = 66

class _Parser(argparse.ArgumentParser):

    def error(self, message: str):

        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")

def _instance_args(p: argparse.ArgumentParser):

    p.add_argument("--map", required=True, type=Path, help="grid map file")
    p.add_argument("--scen", required=True, type=Path, help="scenario file")

def build_parser() -> argparse.ArgumentParser:

    parser = _Parser(prog="crest-ddmapd", 
                description="Executes shelf plans of double-deck MAPD instances.")
    parser.add_argument("-v", "--verbose", action="store_true", 
        help="log planner progress and per-carry traces")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="seed a safe 1-robust shelf plan")
    _instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("execute", help="execute a shelf plan")
    _instance_args(p)
    p.add_argument("--plan", required=True, type=Path)
    p.add_argument("--method", choices=("crest", "baseline"), default="crest")
    p.add_argument("--str", dest="use_str", action="store_true", help="single-trajectory replanning")
    p.add_argument("--ds", dest="use_ds", action="store_true", help="dependency switching")
    p.add_argument("--gtr", dest="use_gtr", action="store_true", help="group trajectory replanning")
    p.add_argument("--overhead", type=int, default=0, help="timesteps per lift or place")
    p.add_argument("--ds-depth", type=int, default=5)
    p.add_argument("--out", required=True, type=Path, help="execution log")

    p = sub.add_parser("validate", help="validate a plan and optionally an execution log")
    _instance_args(p)
    p.add_argument("--plan", required=True, type=Path)
    p.add_argument("--log", type=Path)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int)
    p.add_argument("--budget", type=float, help="seconds per instance")
    p.add_argument("--no-timing", action="store_true", help="zero the wall-clock columns")

    p = sub.add_parser("gen", help="generate a layout instance")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path, help="scenario file; the map goes next to it")

    p = sub.add_parser("dump-dep", help="write the dependency graph of a plan as DOT")
    p.add_argument("--plan", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    return parser

def _cmd_plan(args) -> int:

    inst = ff.load_instance(args.map, args.scen)

    report = check_well_formed(inst)

    if not report.well_formed:

        print(f"warning: instance is not well-formed ({report})", file=sys.stderr)

    try:

        plan = plan_shelves_prioritized(inst, seed=args.seed, restarts=args.restarts, verbose=args.verbose)

    except PlannerFailure as e:

        print(f"planning failed: {e}", file=sys.stderr)

        return EXIT_PLAN_FAILED

    ff.save_plan(plan, args.out)

    print(f"plan: M={plan.M} horizon={plan.horizon} sum={plan.total_length}")

    return EXIT_OK

def _cmd_execute(args) -> int:

    config = ExecutionConfig(overhead=args.overhead, 
                ds_depth_limit=args.ds_depth,
                use_str=args.use_str, 
                use_ds=args.use_ds, 
                use_gtr=args.use_gtr)

    inst = ff.load_instance(args.map, args.scen, config)
    plan = ff.load_plan(args.plan)

    runner = run_crest if args.method == "crest" else run_decomp_pp

    result = runner(inst, plan, config, verbose=args.verbose)

    ff.save_execution_log(result, args.out)

    metrics = compute_metrics(result, plan, inst.N)

    print(f"{result.method}: cost={metrics.cost} norm_cost={metrics.norm_cost} "
        f"makespan={metrics.makespan} switch/shelf={metrics.switch_per_shelf:.3f} "
        f"runtime={metrics.runtime_s:.3f}s")

    validity = validate_execution(result, inst, plan)

    for check, witness in validity.violations:

        print(f"violation {check}: {witness}", file=sys.stderr)

    return EXIT_OK if validity.clean else EXIT_INVALID

def _cmd_validate(args) -> int:

    inst = ff.load_instance(args.map, args.scen)
    plan = ff.load_plan(args.plan)

    status = EXIT_OK

    validity = validate_shelf_plan(plan, inst)

    for name in validity.failed():

        print(f"plan {name}: {validity.witnesses[name]}")

        status = EXIT_INVALID

    if args.log is not None:

        result = ff.load_execution_log(args.log)

        report = validate_execution(result, inst, plan)

        for check, witness in report.violations:

            print(f"execution {check}: {witness}")

            status = EXIT_INVALID

    if status == EXIT_OK:

        print("clean")

    return status

def _cmd_bench(args) -> int:

    suite = load_suite(args.suite)

    df = run_benchmark(suite, jobs=args.jobs, budget_s=args.budget, timing=not args.no_timing)

    write_csv(df, args.out)

    print(f"{len(df)} rows written to {args.out}")

    return EXIT_OK

def _cmd_gen(args) -> int:

    spec = LayoutSpec(kind=args.kind, 
                width=args.width, 
                height=args.height,
                density=args.density, 
                agents=args.agents, 
                seed=args.seed)

    inst = generate_instance(spec, verbose=args.verbose)

    ff.save_instance(inst, args.out.with_suffix(".map"), args.out)

    print(f"{spec.name}: N={inst.N} M={inst.M} rearranged={len(inst.rearranged)}")

    return EXIT_OK

def _cmd_dump_dep(args) -> int:

    _, dg = build_dep(ff.load_plan(args.plan))

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(dg.to_dot(), encoding="utf-8")

    return EXIT_OK

_COMMANDS = {"plan": _cmd_plan,
    "execute": _cmd_execute,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
    "gen": _cmd_gen,
    "dump-dep": _cmd_dump_dep}

def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:

    try:

        args = build_parser().parse_args(argv)

    except SystemExit as e:

        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:

        return _COMMANDS[args.command](args)

    except (ParseError, InstanceError, InfeasibleSpec) as e:

        print(f"error: {e}", file=sys.stderr)

        return EXIT_USAGE

    except OSError as e:

        print(f"error: {e}", file=sys.stderr)

        return EXIT_IO

    except CrestError as e:

        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)

        return EXIT_INVALID

def main():

    sys.exit(cli_dispatch())

if __name__ == "__main__":

    main()
