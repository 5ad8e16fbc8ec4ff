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
from pathlib import Path

from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from crest_ddmapd.envs.shelf_plan import ShelfPlan
from crest_ddmapd.envs.warehouse import Cell, ExecutionConfig, GridMap, Instance
from crest_ddmapd.tasks.execution_task import ExecutionResult
from crest_ddmapd.utils.errors import ParseError

PathLike = Union[str, Path]

SCENARIO_HEADER = "ddmapd 1"
PLAN_HEADER = "ddmapd-plan 1"
LOG_HEADER = "ddmapd-log 1"

_GLYPHS = {".": False, "@": True, "T": True}

def _lines(text: str) -> Iterator[Tuple[int, List[str]]]:

    # (1-based line number, tokens) of every non-empty, non-comment line

    for n, raw in enumerate(text.splitlines(), start=1):

        line = raw.split("#", 1)[0].strip()

        if line:

            yield n, line.split()

def _ints(tokens: Sequence[str], n: int, source: Optional[str]) -> List[int]:

    try:

        return [int(x) for x in tokens]

    except ValueError:

        raise ParseError(f"expected integers, got {' '.join(tokens)!r}", n, source) from None

def _cells(values: Sequence[int], length: int, n: int, source: Optional[str]) -> List[Cell]:

    if len(values) != 2 * length:

        raise ParseError(f"expected {length} cells, got {len(values) / 2:g}", n, source)

    return [(values[2 * i], values[2 * i + 1]) for i in range(length)]

def _flat(cells: Iterable[Cell]) -> str:

    return " ".join(f"{r} {c}" for r, c in cells)

# map

def parse_map(text: str, source: Optional[str] = None) -> GridMap:

    """
    Parses a MovingAI style grid: optional `type`, then `height`, `width`, `map` and the rows.
    '@' and 'T' are obstacles, '.' is free.
    """

    rows = text.splitlines()

    fields: Dict[str, int] = {}

    n = 0

    while n < len(rows):

        tokens = rows[n].split()
        n += 1

        if not tokens:

            continue

        key = tokens[0].lower()

        if key == "map":

            break

        if key == "type":

            continue

        if key not in ("height", "width") or len(tokens) != 2:

            raise ParseError(f"malformed header line {rows[n - 1]!r}", n, source)

        try:

            fields[key] = int(tokens[1])

        except ValueError:

            raise ParseError(f"{key} must be an integer", n, source) from None

    else:

        raise ParseError("missing 'map' line", n, source)

    if "height" not in fields or "width" not in fields:

        raise ParseError("header needs both height and width", n, source)

    h, w = fields["height"], fields["width"]

    if h < 1 or w < 1:

        raise ParseError(f"bad dimensions {h}x{w}", n, source)

    body = [r.rstrip("\r\n") for r in rows[n:]]

    while body and not body[-1].strip():

        body.pop()

    if len(body) != h:

        raise ParseError(f"expected {h} rows, found {len(body)}", n + len(body), source)

    blocked = np.zeros((h, w), dtype=bool)

    for i, row in enumerate(body):

        line_no = n + i + 1

        if len(row) != w:

            raise ParseError(f"row has {len(row)} glyphs, expected {w}", line_no, source)

        for j, glyph in enumerate(row):

            if glyph not in _GLYPHS:

                raise ParseError(f"unknown glyph {glyph!r}", line_no, source)

            blocked[i, j] = _GLYPHS[glyph]

    return GridMap(blocked)

def write_map(grid: GridMap) -> str:

    lines = ["type octile", f"height {grid.height}", f"width {grid.width}", "map"]

    return "\n".join(lines + grid.glyph_rows()) + "\n"

# scenario

def parse_scenario(text: str, 
        grid: GridMap, 
        config: Optional[ExecutionConfig] = None,
        source: Optional[str] = None) -> Instance:

    lines = list(_lines(text))

    if not lines or " ".join(lines[0][1]) != SCENARIO_HEADER:

        raise ParseError(f"expected header {SCENARIO_HEADER!r}", lines[0][0] if lines else 1, source)

    agents: List[Cell] = []
    shelves: List[Tuple[Cell, Cell]] = []

    for n, tokens in lines[1:]:

        kind, values = tokens[0], _ints(tokens[1:], n, source)

        if kind == "agent" and len(values) == 2:

            agents.append((values[0], values[1]))

        elif kind == "shelf" and len(values) == 4:

            shelves.append(((values[0], values[1]), (values[2], values[3])))

        else:

            raise ParseError(f"malformed {kind!r} line", n, source)

    return Instance(grid, agents, shelves, config or ExecutionConfig())

def write_scenario(inst: Instance) -> str:

    lines = [SCENARIO_HEADER]
    lines += [f"agent {r} {c}" for r, c in inst.agents]
    lines += [f"shelf {p[0]} {p[1]} {d[0]} {d[1]}" for p, d in inst.shelves]

    return "\n".join(lines) + "\n"

# plan

def parse_plan(text: str, source: Optional[str] = None) -> ShelfPlan:

    lines = list(_lines(text))

    if not lines:

        raise ParseError("empty plan file", 1, source)

    n0, head = lines[0]

    if " ".join(head[:2]) != PLAN_HEADER or len(head) != 3:

        raise ParseError(f"expected header '{PLAN_HEADER} <M>'", n0, source)

    m = _ints(head[2:], n0, source)[0]

    trajs: Dict[int, List[Cell]] = {}

    for n, tokens in lines[1:]:

        if tokens[0] != "traj" or len(tokens) < 3:

            raise ParseError(f"unexpected line {' '.join(tokens)!r}", n, source)

        values = _ints(tokens[1:], n, source)
        s, length = values[0], values[1]

        if s in trajs or not 0 <= s < m:

            raise ParseError(f"bad or repeated shelf id {s}", n, source)

        trajs[s] = _cells(values[2:], length, n, source)

    if len(trajs) != m:

        raise ParseError(f"header announces {m} trajectories, found {len(trajs)}", lines[-1][0], source)

    return ShelfPlan.from_waypoints([trajs[s] for s in range(m)])

def write_plan(plan: ShelfPlan) -> str:

    lines = [f"{PLAN_HEADER} {plan.M}"]
    lines += [f"traj {t.shelf} {len(t)} {_flat(t.waypoints)}" for t in plan]

    return "\n".join(lines) + "\n"

# execution log

def write_execution_log(result: ExecutionResult) -> str:

    lines = [LOG_HEADER,
        f"meta method {result.method}",
        f"meta overhead {result.overhead}",
        f"meta runtime {result.runtime_s:.6f}"]

    for a, path in enumerate(result.agent_paths):

        lines.append(f"path {a} {len(path)} 0 {_flat(path)}")

    for s, path in enumerate(result.shelf_paths):

        lines.append(f"spath {s} {len(path)} 0 {_flat(path)}")

    for s, idx in enumerate(result.shelf_indices):

        lines.append(f"wp {s} {len(idx)} " + " ".join(str(k) for k in idx))

    for a, dummy in enumerate(result.dummies):

        if dummy:

            t0 = len(result.agent_paths[a]) - 1
            lines.append(f"dummy {a} {len(dummy)} {t0} {_flat(dummy)}")

    for kind, a, s, t in result.events:

        lines.append(f"{kind} {a} {s} {t}")

    for (x, i), (y, j) in result.arcs:

        lines.append(f"arc {x} {i} {y} {j}")

    return "\n".join(lines) + "\n"

def read_execution_log(text: str, source: Optional[str] = None) -> ExecutionResult:

    lines = list(_lines(text))

    if not lines or " ".join(lines[0][1]) != LOG_HEADER:

        raise ParseError(f"expected header {LOG_HEADER!r}", lines[0][0] if lines else 1, source)

    meta = {"method": "unknown", "overhead": "0", "runtime": "0"}

    paths: Dict[str, Dict[int, List[Cell]]] = {"path": {}, "spath": {}, "dummy": {}}
    indices: Dict[int, List[int]] = {}
    events = []
    arcs = []

    for n, tokens in lines[1:]:

        kind = tokens[0]

        if kind == "meta":

            if len(tokens) != 3:

                raise ParseError("meta lines are 'meta <key> <value>'", n, source)

            meta[tokens[1]] = tokens[2]

        elif kind in paths:

            values = _ints(tokens[1:], n, source)

            if len(values) < 3:

                raise ParseError(f"truncated {kind} line", n, source)

            paths[kind][values[0]] = _cells(values[3:], values[1], n, source)

        elif kind == "wp":

            values = _ints(tokens[1:], n, source)

            if len(values) < 2 or len(values) - 2 != values[1]:

                raise ParseError("wp length does not match its entries", n, source)

            indices[values[0]] = values[2:]

        elif kind in ("lift", "place"):

            values = _ints(tokens[1:], n, source)

            if len(values) != 3:

                raise ParseError(f"{kind} lines are '{kind} <agent> <shelf> <t>'", n, source)

            events.append((kind, *values))

        elif kind == "arc":

            values = _ints(tokens[1:], n, source)

            if len(values) != 4:

                raise ParseError("arc lines are 'arc <shelf> <index> <shelf> <index>'", n, source)

            arcs.append(((values[0], values[1]), (values[2], values[3])))

        else:

            raise ParseError(f"unknown record {kind!r}", n, source)

    n_agents = len(paths["path"])
    n_shelves = len(paths["spath"])

    try:

        overhead = int(meta["overhead"])
        runtime = float(meta["runtime"])

    except ValueError:

        raise ParseError("non-numeric meta value", lines[0][0], source) from None

    return ExecutionResult(method=meta["method"],
        overhead=overhead,
        agent_paths=[paths["path"][a] for a in sorted(paths["path"])],
        shelf_paths=[paths["spath"][s] for s in sorted(paths["spath"])],
        shelf_indices=[indices.get(s, []) for s in range(n_shelves)],
        dummies=[paths["dummy"].get(a, []) for a in range(n_agents)],
        events=events,
        arcs=arcs,
        runtime_s=runtime)

# files

def _read(path: PathLike) -> str:

    return Path(path).read_text(encoding="utf-8")

def _write(path: PathLike, text: str):

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")

def load_map(path: PathLike) -> GridMap:

    return parse_map(_read(path), source=str(path))

def load_instance(map_path: PathLike, 
        scen_path: PathLike, 
        config: Optional[ExecutionConfig] = None) -> Instance:

    return parse_scenario(_read(scen_path), load_map(map_path), config, source=str(scen_path))

def load_plan(path: PathLike) -> ShelfPlan:

    return parse_plan(_read(path), source=str(path))

def load_execution_log(path: PathLike) -> ExecutionResult:

    return read_execution_log(_read(path), source=str(path))

def save_instance(inst: Instance, map_path: PathLike, scen_path: PathLike):

    _write(map_path, write_map(inst.map))
    _write(scen_path, write_scenario(inst))

def save_plan(plan: ShelfPlan, path: PathLike):

    _write(path, write_plan(plan))

def save_execution_log(result: ExecutionResult, path: PathLike):

    _write(path, write_execution_log(result))
