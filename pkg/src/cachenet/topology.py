"""Grid and random-cell network geometries with a center-attached server."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import CellMode, ParameterError


def grid_mean_center_distance(side: int) -> float:
    """Exact mean Manhattan distance from a uniform lattice point to the center."""
    c = side // 2
    per_axis = sum(abs(x - c) for x in range(side)) / side
    return 2.0 * per_axis


def grid_max_center_distance(side: int) -> int:
    """Largest Manhattan distance from any lattice point to the center: 2*floor(side/2)."""
    return 2 * (side // 2)


def transmission_range(n: int) -> float:
    """Connectivity-scale transmission range sqrt(log n / n) of the random network."""
    if n < 16:
        raise ParameterError(f"random network needs n >= 16, got {n}")
    return math.sqrt(math.log(n) / n)


def cell_grid_side(n: int, cell_side_factor: float = 1.0) -> int:
    """Number of cells per axis when the unit square is cut at the transmission range."""
    if cell_side_factor <= 0:
        raise ParameterError("cell_side_factor must be positive")
    g = int(1.0 / (cell_side_factor * transmission_range(n)))
    if g < 1:
        raise ParameterError(f"degenerate cell grid for n={n}")
    return g


def _staircase(x: int, y: int, cx: int, cy: int):
    # Deterministic shortest path: walk the x axis first, then the y axis.
    sx = 1 if cx > x else -1
    for xi in range(x + sx, cx + sx, sx):
        yield xi, y
    sy = 1 if cy > y else -1
    for yi in range(y + sy, cy + sy, sy):
        yield cx, yi


@dataclass(frozen=True)
class GridTopology:
    """side x side lattice; each node talks to its four lattice neighbours."""

    side: int

    @property
    def n(self) -> int:
        return self.side * self.side

    @property
    def n_nodes(self) -> int:
        return self.n

    @property
    def server_xy(self) -> tuple[int, int]:
        return self.side // 2, self.side // 2

    @property
    def server(self) -> int:
        cx, cy = self.server_xy
        return cy * self.side + cx

    def coords(self, v: int) -> tuple[int, int]:
        return v % self.side, v // self.side

    def index(self, x: int, y: int) -> int:
        return y * self.side + x

    def _check(self, v: int):
        if not 0 <= v < self.n:
            raise ParameterError(f"node {v} outside grid of {self.n} nodes")

    def hop_distance(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        ax, ay = self.coords(a)
        bx, by = self.coords(b)
        return abs(ax - bx) + abs(ay - by)

    def path_to_server(self, v: int) -> list[int]:
        """Nodes visited after v on the x-then-y staircase, ending at the server."""
        self._check(v)
        x, y = self.coords(v)
        cx, cy = self.server_xy
        return [self.index(px, py) for px, py in _staircase(x, y, cx, cy)]

    def iter_path_to_server(self, v: int):
        """Lazy variant of path_to_server for probe-and-stop consumers."""
        self._check(v)
        x, y = self.coords(v)
        cx, cy = self.server_xy
        for px, py in _staircase(x, y, cx, cy):
            yield self.index(px, py)

    def server_distances(self) -> np.ndarray:
        """Manhattan distance to the server for every node, indexed by node id."""
        ax = np.abs(np.arange(self.side) - self.side // 2)
        return (ax[None, :] + ax[:, None]).reshape(-1)

    def mean_server_distance(self) -> float:
        return grid_mean_center_distance(self.side)

    def max_server_distance(self) -> int:
        return grid_max_center_distance(self.side)


@dataclass(frozen=True, eq=False)
class RandomCellTopology:
    """Unit square cut into a g x g cell grid; hops are counted in cell steps.

    Idealized mode places exactly ceil(log n) nodes in every cell, matching the
    equal-occupancy assumption behind the closed forms.  Empirical mode drops n
    points uniformly and lets cell occupancies fluctuate.
    """

    n: int                      # configured node count; drives the cell scale
    cell_grid_side: int
    mode: CellMode
    positions: np.ndarray       # (n_nodes, 2) float in [0,1)^2
    node_cell: np.ndarray       # (n_nodes,) cell index of every node
    seed: int
    nodes_per_cell: int | None = None   # idealized mode only
    _members: tuple = field(default=(), repr=False)

    @property
    def n_nodes(self) -> int:
        return self.node_cell.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cell_grid_side * self.cell_grid_side

    @property
    def server_cell_xy(self) -> tuple[int, int]:
        return self.cell_grid_side // 2, self.cell_grid_side // 2

    @property
    def server_cell(self) -> int:
        cx, cy = self.server_cell_xy
        return cy * self.cell_grid_side + cx

    def cell_coords(self, c: int) -> tuple[int, int]:
        return c % self.cell_grid_side, c // self.cell_grid_side

    def cell_index(self, cx: int, cy: int) -> int:
        return cy * self.cell_grid_side + cx

    def _check_node(self, v: int):
        if not 0 <= v < self.n_nodes:
            raise ParameterError(f"node {v} outside topology of {self.n_nodes} nodes")

    def cell_of(self, v: int) -> int:
        self._check_node(v)
        return int(self.node_cell[v])

    def cell_members(self, c: int) -> np.ndarray:
        if not 0 <= c < self.n_cells:
            raise ParameterError(f"cell {c} outside {self.n_cells}-cell grid")
        return self._members[c]

    def cell_distance(self, ca: int, cb: int) -> int:
        ax, ay = self.cell_coords(ca)
        bx, by = self.cell_coords(cb)
        return abs(ax - bx) + abs(ay - by)

    def hop_distance(self, a: int, b: int) -> int:
        """Cell transitions between the cells of two nodes (0 when co-located)."""
        self._check_node(a)
        self._check_node(b)
        return self.cell_distance(int(self.node_cell[a]), int(self.node_cell[b]))

    def cell_path_to_server(self, c: int) -> list[int]:
        """Cells visited after c on the x-then-y staircase, ending at the server cell."""
        x, y = self.cell_coords(c)
        cx, cy = self.server_cell_xy
        return [self.cell_index(px, py) for px, py in _staircase(x, y, cx, cy)]

    def path_to_server(self, v: int) -> list[int]:
        return self.cell_path_to_server(self.cell_of(v))

    def cell_server_distances(self) -> np.ndarray:
        ax = np.abs(np.arange(self.cell_grid_side) - self.cell_grid_side // 2)
        return (ax[None, :] + ax[:, None]).reshape(-1)

    def cell_occupancy(self) -> np.ndarray:
        return np.bincount(self.node_cell, minlength=self.n_cells)

    def mean_server_distance(self) -> float:
        """Mean cell-path length from a uniformly chosen node to the server cell."""
        return float(self.cell_server_distances()[self.node_cell].mean())

    def max_server_distance(self) -> int:
        """Largest cell-path length from any occupied cell to the server cell."""
        occupied = self.cell_occupancy() > 0
        return int(self.cell_server_distances()[occupied].max())


def build_grid(n: int) -> GridTopology:
    """Lattice of side sqrt(n) with the server attached to the middle node."""
    if n < 4:
        raise ParameterError(f"need at least 4 nodes, got {n}")
    side = math.isqrt(n)
    if side * side != n:
        raise ParameterError(f"grid needs a perfect-square node count, got {n}")
    return GridTopology(side)


def _with_members(top: RandomCellTopology) -> RandomCellTopology:
    order = np.argsort(top.node_cell, kind="stable")
    bounds = np.searchsorted(top.node_cell[order], np.arange(top.n_cells + 1))
    members = tuple(order[bounds[c]:bounds[c + 1]] for c in range(top.n_cells))
    object.__setattr__(top, "_members", members)
    return top


def build_cell_grid(g: int, nodes_per_cell: int, seed: int = 0,
                    n: int | None = None) -> RandomCellTopology:
    """Synthetic equal-occupancy topology: g x g cells, a fixed count per cell."""
    if g < 1 or nodes_per_cell < 1:
        raise ParameterError("cell grid and per-cell count must be positive")
    rng = np.random.default_rng(seed)
    n_nodes = g * g * nodes_per_cell
    node_cell = np.repeat(np.arange(g * g), nodes_per_cell)
    corner = np.stack([node_cell % g, node_cell // g], axis=1).astype(float)
    positions = (corner + rng.random((n_nodes, 2))) / g
    top = RandomCellTopology(
        n=n if n is not None else n_nodes,
        cell_grid_side=g,
        mode=CellMode.IDEALIZED,
        positions=positions,
        node_cell=node_cell,
        seed=seed,
        nodes_per_cell=nodes_per_cell,
    )
    return _with_members(top)


def build_random(n: int, mode: CellMode = CellMode.IDEALIZED, seed: int = 0,
                 cell_side_factor: float = 1.0) -> RandomCellTopology:
    """Random network over the unit square, cells at the transmission-range scale.

    cell_side_factor scales the cell side relative to sqrt(log n / n); the
    default keeps expected empirical occupancy at about log n per cell.
    """
    if n < 16:
        raise ParameterError(f"random scenario needs n >= 16, got {n}")
    g = cell_grid_side(n, cell_side_factor)
    if mode is CellMode.IDEALIZED:
        per_cell = math.ceil(math.log(n))
        return build_cell_grid(g, per_cell, seed, n=n)
    rng = np.random.default_rng(seed)
    positions = rng.random((n, 2))
    cx = np.minimum((positions[:, 0] * g).astype(int), g - 1)
    cy = np.minimum((positions[:, 1] * g).astype(int), g - 1)
    top = RandomCellTopology(
        n=n,
        cell_grid_side=g,
        mode=CellMode.EMPIRICAL,
        positions=positions,
        node_cell=cy * g + cx,
        seed=seed,
    )
    return _with_members(top)


def dump_topology(top) -> str:
    """Plain-text listing, one node per line: id, coordinates, cell."""
    lines = ["# id\tx\ty\tcell"]
    if isinstance(top, GridTopology):
        for v in range(top.n):
            x, y = top.coords(v)
            lines.append(f"{v}\t{x}\t{y}\t-")
    elif isinstance(top, RandomCellTopology):
        for v in range(top.n_nodes):
            x, y = top.positions[v]
            lines.append(f"{v}\t{x:.6f}\t{y:.6f}\t{int(top.node_cell[v])}")
    else:
        raise ParameterError(f"unknown topology type {type(top).__name__}")
    return "\n".join(lines) + "\n"
