"""Content discovery over a possession snapshot.

A cache field assigns every node a boolean "holds the content" flag.  The
origin server (attached at the grid center / center cell) always has the
content and is not part of the field.  A discovery run reports which source
answers a request, how many hops away it is, and how many nodes saw the
query.  The requester's own flag is never consulted: requests only exist at
nodes that lack the content.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import ParameterError
from .topology import GridTopology, RandomCellTopology


class SourceKind(Enum):
    CACHE = "cache"
    SERVER = "server"


@dataclass(frozen=True)
class DiscoveryOutcome:
    source: SourceKind
    source_node: int | None     # None when the server answers
    hops: int
    probed: int                 # nodes that saw the query (overhead only)

    @property
    def from_cache(self) -> bool:
        return self.source is SourceKind.CACHE


def _as_field(field, n_nodes: int) -> np.ndarray:
    arr = np.asarray(field, dtype=bool)
    if arr.shape != (n_nodes,):
        raise ParameterError(f"field must have one flag per node, got shape {arr.shape}")
    return arr


def pathwise_discover(grid: GridTopology, field, requester: int) -> DiscoveryOutcome:
    """Probe the staircase path toward the server; the first holder answers.

    Hops equal the answering node's position on the path.  If no node on the
    path holds the content the server answers at the requester's full distance.
    """
    flags = _as_field(field, grid.n)
    hops = 0
    for node in grid.iter_path_to_server(requester):
        hops += 1
        if flags[node]:
            return DiscoveryOutcome(SourceKind.CACHE, node, hops, hops)
    return DiscoveryOutcome(SourceKind.SERVER, None, hops, hops)


def _ball_size(grid: GridTopology, x: int, y: int, radius: int) -> int:
    # Lattice points of the grid within Manhattan distance <= radius of (x, y).
    count = 0
    for dy in range(-radius, radius + 1):
        yy = y + dy
        if not 0 <= yy < grid.side:
            continue
        span = radius - abs(dy)
        count += min(grid.side - 1, x + span) - max(0, x - span) + 1
    return count


def flood_discover(grid: GridTopology, field, requester: int) -> DiscoveryOutcome:
    """Expand hop rings around the requester until some ring holds the content.

    The answering node is the nearest holder; coordinate-lexicographic order
    breaks ties.  Rings are truncated at the grid boundary.  With an all-empty
    field the query floods the whole grid and the server answers.
    """
    flags = _as_field(field, grid.n)
    rx, ry = grid.coords(requester)
    holders = np.flatnonzero(flags)
    holders = holders[holders != requester]
    if holders.size == 0:
        d = grid.hop_distance(requester, grid.server)
        return DiscoveryOutcome(SourceKind.SERVER, None, d, grid.n - 1)
    hx = holders % grid.side
    hy = holders // grid.side
    dist = np.abs(hx - rx) + np.abs(hy - ry)
    radius = int(dist.min())
    nearest = holders[dist == radius]
    order = np.lexsort((nearest // grid.side, nearest % grid.side))  # (x, y) ties
    source = int(nearest[order[0]])
    return DiscoveryOutcome(SourceKind.CACHE, source, radius,
                            _ball_size(grid, rx, ry, radius) - 1)


def flood_discover_ringwalk(grid: GridTopology, field, requester: int) -> DiscoveryOutcome:
    """Reference flooding search that literally walks ring after ring.

    Kept as an independent cross-check of flood_discover (and used by the
    debug mode of the Monte Carlo estimators); quadratic and slow.
    """
    flags = _as_field(field, grid.n)
    rx, ry = grid.coords(requester)
    max_radius = max(rx, grid.side - 1 - rx) + max(ry, grid.side - 1 - ry)
    probed = 0
    for radius in range(1, max_radius + 1):
        ring = []
        for dx in range(-radius, radius + 1):
            x = rx + dx
            if not 0 <= x < grid.side:
                continue
            span = radius - abs(dx)
            for y in {ry - span, ry + span}:
                if 0 <= y < grid.side:
                    ring.append((x, y))
        probed += len(ring)
        found = sorted((x, y) for x, y in ring if flags[grid.index(x, y)])
        if found:
            x, y = found[0]
            return DiscoveryOutcome(SourceKind.CACHE, grid.index(x, y), radius, probed)
    d = grid.hop_distance(requester, grid.server)
    return DiscoveryOutcome(SourceKind.SERVER, None, d, grid.n - 1)


def cell_pathwise_discover(topology: RandomCellTopology, field, requester: int,
                           rng: np.random.Generator) -> DiscoveryOutcome:
    """Relay the query cell by cell toward the server cell.

    The first round covers the requester's own cell and the next cell on the
    path (one hop); each later round covers one more cell.  Within the
    answering pool the source is drawn uniformly among holders, which is why a
    generator must be supplied.  When every cell on the path misses, the
    server answers at the requester's cell-path distance.
    """
    flags = _as_field(field, topology.n_nodes)
    own = topology.cell_of(requester)
    path = topology.cell_path_to_server(own)

    own_members = topology.cell_members(own)
    own_members = own_members[own_members != requester]
    pool = [own_members[flags[own_members]]]
    probed = own_members.size
    if path:
        first = topology.cell_members(path[0])
        pool.append(first[flags[first]])
        probed += first.size
    candidates = np.concatenate(pool) if len(pool) > 1 else pool[0]
    if candidates.size:
        return DiscoveryOutcome(SourceKind.CACHE, int(rng.choice(candidates)), 1, probed)

    for h, cell in enumerate(path[1:], start=2):
        members = topology.cell_members(cell)
        probed += members.size
        holders = members[flags[members]]
        if holders.size:
            return DiscoveryOutcome(SourceKind.CACHE, int(rng.choice(holders)), h, probed)
    return DiscoveryOutcome(SourceKind.SERVER, None, len(path), probed)
