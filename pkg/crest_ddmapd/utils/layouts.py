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
from dataclasses import dataclass

from typing import List, Optional, Tuple

import numpy as np

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.envs.warehouse import Cell, ExecutionConfig, GridMap, Instance, check_well_formed
from crest_ddmapd.utils.errors import InfeasibleSpec

KINDS = ("r2r", "s2w", "dne")

@dataclass(frozen=True)
class LayoutSpec:

    """ Parameters of a generated warehouse.

    Args:
        kind (str): "r2r" random to random, "s2w" staging to warehouse, "dne" dispersed and evacuated
        width (int): grid columns
        height (int): grid rows
        density (float): shelves over free cells
        agents (int): number of agents
        seed (int): generator seed
        rearranged_ratio (float): r2r only, fraction of shelves with p != d
        staging_cols (int): s2w only, width of the staging strip (None sizes it to the shelves)
        block (int): side of the storage blocks between one-cell aisles
        max_tries (int): regenerations before giving up on well-formedness
    """

    kind: str
    width: int
    height: int
    density: float
    agents: int
    seed: int = 0
    rearranged_ratio: float = 0.5
    staging_cols: Optional[int] = None
    block: int = 2
    max_tries: int = 200

    @property
    def name(self) -> str:

        return f"{self.kind}-{self.width}x{self.height}-d{self.density:g}-n{self.agents}-s{self.seed}"

def _storage_mask(height: int, width: int, col0: int, block: int) -> np.ndarray:

    # blocks of block x block cells separated by one-cell aisles, starting after an aisle at col0

    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]

    in_block_r = (rows % (block + 1)) != 0
    in_block_c = ((cols - col0) % (block + 1)) != 0

    mask = in_block_r & in_block_c & (cols > col0)

    # keep the last row and column as aisles
    mask[-1, :] = False
    mask[:, -1] = False

    return mask

def _cells(mask: np.ndarray) -> List[Cell]:

    return [(int(r), int(c)) for r, c in zip(*np.nonzero(mask))]

def _pick(rng: np.random.Generator, cells: List[Cell], n: int) -> List[Cell]:

    if n > len(cells):

        raise InfeasibleSpec(f"need {n} cells, only {len(cells)} available")

    return [cells[i] for i in rng.choice(len(cells), size=n, replace=False)]

def _shelves_r2r(spec: LayoutSpec, 
        rng: np.random.Generator, 
        free: List[Cell], 
        M: int) -> List[Tuple[Cell, Cell]]:

    pickups = _pick(rng, free, M)

    R = int(round(spec.rearranged_ratio * M))
    moved = set(int(i) for i in rng.choice(M, size=R, replace=False))

    stationary = {pickups[s] for s in range(M) if s not in moved}
    order = sorted(moved)

    if R == 1:

        stationary.add(pickups[order[0]])

    targets = _pick(rng, [c for c in free if c not in stationary], R)

    # no rearranged shelf may draw its own pickup
    for i in range(len(order)):

        if targets[i] == pickups[order[i]]:

            j = (i + 1) % len(order)
            targets[i], targets[j] = targets[j], targets[i]

    deliveries = list(pickups)

    for i, s in enumerate(order):

        deliveries[s] = targets[i]

    return list(zip(pickups, deliveries))

def _shelves_s2w(spec: LayoutSpec, 
        rng: np.random.Generator, 
        M: int) -> List[Tuple[Cell, Cell]]:

    h, w = spec.height, spec.width

    cols = spec.staging_cols

    if cols is None:

        # strip about 80% full
        cols = max(1, int(np.ceil(M / (0.8 * h))))

    if cols + 2 >= w:

        raise InfeasibleSpec(f"staging strip of {cols} columns leaves no storage")

    strip = [(r, c) for r in range(h) for c in range(cols)]
    storage = _cells(_storage_mask(h, w, cols, spec.block))

    return list(zip(_pick(rng, strip, M), _pick(rng, storage, M)))

def _shelves_dne(spec: LayoutSpec, 
        rng: np.random.Generator, 
        free: List[Cell], 
        M: int) -> List[Tuple[Cell, Cell]]:

    mask = _storage_mask(spec.height, spec.width, 0, spec.block)

    storage = _cells(mask)
    outside = [c for c in free if not mask[c]]

    inside = M // 2

    pickups = _pick(rng, storage, inside) + _pick(rng, outside, M - inside)
    deliveries = _pick(rng, storage, M)

    return list(zip(pickups, deliveries))

def _attempt(spec: LayoutSpec, rng: np.random.Generator, config: ExecutionConfig) -> Instance:

    grid = GridMap.empty(spec.width, spec.height)
    free = grid.free_cells()

    M = int(round(spec.density * len(free)))

    if M < spec.agents:

        raise InfeasibleSpec(f"{M} shelves for {spec.agents} agents violates N <= M")

    if spec.kind == "r2r":

        shelves = _shelves_r2r(spec, rng, free, M)

    elif spec.kind == "s2w":

        shelves = _shelves_s2w(spec, rng, M)

    else:

        shelves = _shelves_dne(spec, rng, free, M)

    taken = {p for p, _ in shelves} | {d for _, d in shelves}

    agents = _pick(rng, [c for c in free if c not in taken], spec.agents)

    return Instance(grid, agents, shelves, config)

def generate_instance(spec: LayoutSpec, 
        config: Optional[ExecutionConfig] = None,
        verbose: bool = False) -> Instance:

    """
    Draws a well-formed instance of the given layout.

    Deterministic in the spec: each regeneration continues the same seeded stream.

    Raises:
        InfeasibleSpec: bad parameters, or no well-formed draw within spec.max_tries
    """

    if spec.kind not in KINDS:

        raise InfeasibleSpec(f"unknown layout kind {spec.kind!r}, expected one of {KINDS}")

    if spec.width < 2 or spec.height < 2 or spec.agents < 1 or not 0.0 <= spec.density <= 1.0:

        raise InfeasibleSpec(f"bad layout parameters {spec}")

    if not 0.0 <= spec.rearranged_ratio <= 1.0:

        raise InfeasibleSpec(f"rearranged_ratio must lie in [0, 1], got {spec.rearranged_ratio}")

    rng = np.random.default_rng(spec.seed)

    config = config or ExecutionConfig()

    for attempt in range(spec.max_tries):

        inst = _attempt(spec, rng, config)

        report = check_well_formed(inst)

        if report.well_formed:

            if verbose:

                Journal.log("Layouts",
                    "generate_instance",
                    f"{spec.name}: well-formed after {attempt + 1} draw(s), M={inst.M}",
                    LogType.INFO)

            return inst

    exception = f"{spec.name}: no well-formed draw in {spec.max_tries} tries"

    Journal.log("Layouts",
        "generate_instance",
        exception,
        LogType.EXCEP,
        throw_when_excep = False)

    raise InfeasibleSpec(exception)
