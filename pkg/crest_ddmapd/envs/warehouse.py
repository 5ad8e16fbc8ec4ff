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
import threading

from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from SharsorIPCpp.PySharsorIPC import LogType
from SharsorIPCpp.PySharsorIPC import Journal

from crest_ddmapd.utils.errors import InstanceError

Cell = Tuple[int, int] # (row, col), row grows downward

UNREACHABLE = math.inf

_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))

class GridMap:

    """ 4-connected warehouse grid.

    Args:
        blocked (np.ndarray): boolean (height, width) array, True on static obstacles.
    """

    def __init__(self, 
            blocked: np.ndarray):

        blocked = np.asarray(blocked, dtype=bool)

        if blocked.ndim != 2 or blocked.shape[0] < 1 or blocked.shape[1] < 1:

            exception = f"grid must be a non-empty 2D array, got shape {blocked.shape}"

            Journal.log(self.__class__.__name__,
                "__init__",
                exception,
                LogType.EXCEP,
                throw_when_excep = False)

            raise InstanceError(exception)

        self._blocked = blocked.copy()
        self._blocked.setflags(write=False)

        self.height = int(blocked.shape[0])
        self.width = int(blocked.shape[1])

        self._adjacency = None

    @classmethod
    def empty(cls, 
            width: int, 
            height: int):

        return cls(np.zeros((height, width), dtype=bool))

    @property
    def blocked(self) -> np.ndarray:

        return self._blocked

    def in_bounds(self, cell: Cell) -> bool:

        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Cell) -> bool:

        return self.in_bounds(cell) and not self._blocked[cell[0], cell[1]]

    def index(self, cell: Cell) -> int:

        return cell[0] * self.width + cell[1]

    def cell_of(self, index: int) -> Cell:

        return (int(index // self.width), int(index % self.width))

    @property
    def n_cells(self) -> int:

        return self.width * self.height

    @property
    def n_free(self) -> int:

        return int(np.count_nonzero(~self._blocked))

    def free_cells(self) -> List[Cell]:

        rows, cols = np.nonzero(~self._blocked)

        return [(int(r), int(c)) for r, c in zip(rows, cols)]

    def neighbors(self, cell: Cell) -> Iterator[Cell]:

        for dr, dc in _MOVES:

            nxt = (cell[0] + dr, cell[1] + dc)

            if self.is_free(nxt):

                yield nxt

    def adjacent(self, u: Cell, v: Cell) -> bool:

        return abs(u[0] - v[0]) + abs(u[1] - v[1]) == 1

    def adjacency(self) -> csr_matrix:

        # symmetric unit-weight adjacency over all cells (blocked cells are isolated)

        if self._adjacency is None:

            free = ~self._blocked
            idx = np.arange(self.n_cells).reshape(self.height, self.width)

            horiz = free[:, :-1] & free[:, 1:]
            vert = free[:-1, :] & free[1:, :]

            src = np.concatenate([idx[:, :-1][horiz], idx[:-1, :][vert]])
            dst = np.concatenate([idx[:, 1:][horiz], idx[1:, :][vert]])

            rows = np.concatenate([src, dst])
            cols = np.concatenate([dst, src])

            self._adjacency = csr_matrix((np.ones(rows.shape[0], dtype=np.int8), (rows, cols)),
                                    shape=(self.n_cells, self.n_cells))

        return self._adjacency

    def glyph_rows(self) -> List[str]:

        return ["".join("@" if b else "." for b in row) for row in self._blocked]

@dataclass(frozen=True)
class ExecutionConfig:

    overhead: int = 0 # Δ, timesteps per lift or per place
    ds_depth_limit: int = 5
    use_str: bool = False
    use_ds: bool = False
    use_gtr: bool = False
    unmatched_penalty: Optional[int] = None # None -> width*height*(M+N)
    match_assigned_agents: bool = False
    check_invariants: bool = False

    def __post_init__(self):

        if self.overhead < 0:

            raise InstanceError(f"overhead must be non-negative, got {self.overhead}")

        if self.ds_depth_limit < 1:

            raise InstanceError(f"ds_depth_limit must be positive, got {self.ds_depth_limit}")

        if self.unmatched_penalty is not None and self.unmatched_penalty <= 0:

            raise InstanceError(f"unmatched_penalty must be positive, got {self.unmatched_penalty}")

    @property
    def any_strategy(self) -> bool:

        return self.use_str or self.use_ds or self.use_gtr

    @classmethod
    def plain(cls, overhead: int = 0, **kwargs):

        return cls(overhead=overhead, **kwargs)

    @classmethod
    def all_strategies(cls, overhead: int = 0, **kwargs):

        return cls(overhead=overhead, use_str=True, use_ds=True, use_gtr=True, **kwargs)

    def with_strategies(self, 
            use_str: bool, 
            use_ds: bool, 
            use_gtr: bool):

        return replace(self, use_str=use_str, use_ds=use_ds, use_gtr=use_gtr)

@dataclass(frozen=True, eq=False)
class Instance:

    map: GridMap
    agents: Tuple[Cell, ...]
    shelves: Tuple[Tuple[Cell, Cell], ...] # (pickup, delivery)
    config: ExecutionConfig = field(default_factory=ExecutionConfig)

    def __post_init__(self):

        object.__setattr__(self, "agents", tuple(tuple(a) for a in self.agents))
        object.__setattr__(self, "shelves", tuple((tuple(p), tuple(d)) for p, d in self.shelves))

        self._check()

    def _check(self):

        for a in self.agents:

            if not self.map.is_free(a):

                raise InstanceError(f"agent start {a} is blocked or out of bounds")

        for p, d in self.shelves:

            for cell in (p, d):

                if not self.map.is_free(cell):

                    raise InstanceError(f"shelf endpoint {cell} is blocked or out of bounds")

        if len(set(self.agents)) != len(self.agents):

            raise InstanceError("agent initial cells must be distinct")

        if len(set(self.pickups)) != len(self.pickups):

            raise InstanceError("shelf pickups must be distinct")

        if len(set(self.deliveries)) != len(self.deliveries):

            raise InstanceError("shelf deliveries must be distinct")

        if self.N < 1:

            raise InstanceError("at least one agent is required")

        if self.N > self.M:

            raise InstanceError(f"expected N <= M, got N={self.N}, M={self.M}")

        overlap = set(self.agents) & set(self.pickups)

        if overlap:

            raise InstanceError(f"agent starts coincide with shelf pickups: {sorted(overlap)}")

    @property
    def N(self) -> int:

        return len(self.agents)

    @property
    def M(self) -> int:

        return len(self.shelves)

    @property
    def pickups(self) -> List[Cell]:

        return [p for p, _ in self.shelves]

    @property
    def deliveries(self) -> List[Cell]:

        return [d for _, d in self.shelves]

    @property
    def unmatched_penalty(self) -> int:

        if self.config.unmatched_penalty is not None:

            return self.config.unmatched_penalty

        return self.map.width * self.map.height * (self.M + self.N)

    @property
    def rearranged(self) -> List[int]:

        return [s for s, (p, d) in enumerate(self.shelves) if p != d]

    def with_config(self, config: ExecutionConfig) -> "Instance":

        return replace(self, config=config)

class DistanceOracle:

    """ Lazily computed single-source shortest path tables over the grid.

    Only static obstacles block; shelves and agents are ignored. Rows are
    cached per source cell behind a lock, so one oracle can be shared between threads.
    """

    def __init__(self, 
            grid: GridMap):

        self._grid = grid
        self._rows: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def grid(self) -> GridMap:

        return self._grid

    def row(self, source: Cell) -> np.ndarray:

        src = self._grid.index(source)

        with self._lock:

            row = self._rows.get(src)

            if row is None:

                row = dijkstra(self._grid.adjacency(), 
                        directed=False, 
                        unweighted=True, 
                        indices=src)
                row.setflags(write=False)

                self._rows[src] = row

        return row

    def dist(self, u: Cell, v: Cell) -> float:

        if u == v:

            return 0

        value = self.row(u)[self._grid.index(v)]

        return UNREACHABLE if np.isinf(value) else int(value)

    def cached_sources(self) -> int:

        return len(self._rows)

def shortest_dist(oracle: DistanceOracle, u: Cell, v: Cell) -> float:

    return oracle.dist(u, v)

@dataclass(frozen=True)
class WellFormedReport:

    connected_after_removal: bool
    enough_empty: bool
    empty_cells: int
    disconnecting_removal: Optional[Tuple[Cell, ...]] = None

    @property
    def well_formed(self) -> bool:

        return self.connected_after_removal and self.enough_empty

def _connected(grid: GridMap, removed: set) -> bool:

    keep = [i for i in range(grid.n_cells) 
        if not grid.blocked.flat[i] and grid.cell_of(i) not in removed]

    if len(keep) <= 1:

        return True

    sub = grid.adjacency()[keep][:, keep]

    n_components, _ = connected_components(sub, directed=False)

    return n_components == 1

def check_well_formed(inst: Instance) -> WellFormedReport:

    """
    Checks the two well-formedness conditions of a DD-MAPD instance.

    Parameters:
        inst (Instance): the instance
    Returns:
        report (WellFormedReport): (a) the grid stays connected when the initial cells
            of any N-1 agents are removed, (b) at least two cells are neither agent
            starts nor shelf pickups (sufficient for a safe 1-robust plan to exist)
    """

    grid = inst.map

    witness = None

    for a in inst.agents:

        removed = set(inst.agents) - {a}

        if not _connected(grid, removed):

            witness = tuple(sorted(removed))

            break

    occupied = set(inst.agents) | set(inst.pickups)
    empty = grid.n_free - len(occupied)

    return WellFormedReport(connected_after_removal=witness is None,
                    enough_empty=empty >= 2,
                    empty_cells=empty,
                    disconnecting_removal=witness)
