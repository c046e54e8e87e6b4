import math

import numpy as np
import pytest

from cachenet import (CellMode, ParameterError, build_cell_grid, build_grid,
                      build_random, dump_topology)
from cachenet.topology import grid_mean_center_distance, grid_max_center_distance


def test_build_grid_basics():
    g = build_grid(9)
    assert g.side == 3 and g.coords(g.server) == (1, 1)
    big = build_grid(10000)
    assert big.coords(big.server) == (50, 50)


@pytest.mark.parametrize("n", [10, 2, 3, 12])
def test_build_grid_rejects_bad_counts(n):
    with pytest.raises(ParameterError):
        build_grid(n)


def test_hop_distance_examples():
    g = build_grid(25)
    assert g.hop_distance(g.index(0, 0), g.index(3, 4)) == 7
    assert g.hop_distance(7, 7) == 0
    with pytest.raises(ParameterError):
        g.hop_distance(0, 25)


def test_hop_distance_is_a_metric():
    g = build_grid(12 * 12)
    rng = np.random.default_rng(0)
    for _ in range(300):
        a, b, c = (int(v) for v in rng.integers(0, g.n, 3))
        assert g.hop_distance(a, b) == g.hop_distance(b, a)
        assert g.hop_distance(a, c) <= g.hop_distance(a, b) + g.hop_distance(b, c)
        assert g.hop_distance(a, a) == 0


def test_path_to_server_examples():
    g = build_grid(9)
    path = g.path_to_server(g.index(0, 0))
    assert len(path) == 2 and path[-1] == g.server
    assert g.path_to_server(g.server) == []
    big = build_grid(101 * 101)
    assert len(big.path_to_server(0)) == 100


def test_paths_shrink_and_stay_adjacent():
    g = build_grid(49)
    for v in range(g.n):
        path = g.path_to_server(v)
        assert len(path) == g.hop_distance(v, g.server)
        prev = v
        for node in path:
            assert g.hop_distance(prev, node) == 1
            prev = node
        remaining = [g.hop_distance(p, g.server) for p in path]
        assert remaining == list(range(len(path) - 1, -1, -1))


def test_mean_server_distance_exact():
    assert build_grid(9).mean_server_distance() == pytest.approx(4.0 / 3.0)
    # independent oracle: brute-force average over every node
    for side in (3, 8, 11, 20):
        g = build_grid(side * side)
        brute = sum(g.hop_distance(v, g.server) for v in range(g.n)) / g.n
        assert g.mean_server_distance() == pytest.approx(brute, rel=1e-12)
    for side in (11, 101):  # closed form for odd sides
        assert grid_mean_center_distance(side) == pytest.approx((side**2 - 1) / (2 * side))


def test_max_server_distance():
    assert build_grid(9).max_server_distance() == 2
    assert build_grid(101 * 101).max_server_distance() == 100
    assert grid_max_center_distance(8) == 8


def test_grid_ratios_converge_monotonically():
    h_max_ratio, mean_ratio = [], []
    for side in (11, 31, 101, 301):
        h_max_ratio.append(grid_max_center_distance(side) / side)
        mean_ratio.append(grid_mean_center_distance(side) / side)
    assert all(b > a for a, b in zip(h_max_ratio, h_max_ratio[1:]))
    assert all(b > a for a, b in zip(mean_ratio, mean_ratio[1:]))
    assert h_max_ratio[-1] == pytest.approx(1.0, abs=0.01)
    assert mean_ratio[-1] == pytest.approx(0.5, abs=0.01)


def test_build_random_rejects_small_n():
    with pytest.raises(ParameterError):
        build_random(8)


def test_idealized_occupancy_is_exact():
    top = build_random(54, CellMode.IDEALIZED, seed=1)
    assert top.nodes_per_cell == math.ceil(math.log(54)) == 4
    assert np.all(top.cell_occupancy() == 4)
    big = build_random(10**4, CellMode.IDEALIZED, seed=2)
    assert np.all(big.cell_occupancy() == math.ceil(math.log(10**4)))


def test_empirical_occupancy_near_log_n():
    top = build_random(10**4, CellMode.EMPIRICAL, seed=3)
    occ = top.cell_occupancy()
    target = math.log(10**4)
    assert abs(occ.mean() - target) / target < 0.10
    healthy = np.mean((occ >= 0.5 * target) & (occ <= 2.0 * target))
    assert healthy >= 0.95


def test_corner_cells_hop_distance():
    top = build_random(10**4, CellMode.IDEALIZED, seed=4)
    g = top.cell_grid_side
    a = int(top.cell_members(0)[0])                      # cell (0, 0)
    b = int(top.cell_members(top.n_cells - 1)[0])        # cell (g-1, g-1)
    assert top.hop_distance(a, b) == 2 * (g - 1)
    assert top.hop_distance(a, a) == 0


def test_mean_cell_distance_scales_with_range():
    for n in (10**3, 10**4, 10**5):
        top = build_random(n, CellMode.IDEALIZED, seed=5)
        r = math.sqrt(math.log(n) / n)
        assert 0.4 <= top.mean_server_distance() * r <= 1.2


def test_cell_paths_consistent():
    top = build_random(300, CellMode.IDEALIZED, seed=6)
    for c in range(top.n_cells):
        path = top.cell_path_to_server(c)
        assert len(path) == top.cell_distance(c, top.server_cell)
        prev = c
        for cell in path:
            assert top.cell_distance(prev, cell) == 1
            prev = cell
    v = int(top.cell_members(0)[0])
    assert top.path_to_server(v) == top.cell_path_to_server(0)


def test_build_cell_grid_synthetic():
    top = build_cell_grid(3, 2, seed=0)
    assert top.n_nodes == 18 and top.cell_grid_side == 3
    assert top.server_cell == 4
    assert np.all(top.cell_occupancy() == 2)


def test_topology_is_deterministic_per_seed():
    a = build_random(500, CellMode.EMPIRICAL, seed=9)
    b = build_random(500, CellMode.EMPIRICAL, seed=9)
    c = build_random(500, CellMode.EMPIRICAL, seed=10)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_dump_topology_listing():
    g = build_grid(16)
    text = dump_topology(g)
    lines = text.strip().splitlines()
    assert lines[0].startswith("#") and len(lines) == 17
    assert lines[1].split("\t") == ["0", "0", "0", "-"]
    top = build_random(54, CellMode.IDEALIZED, seed=1)
    cells = dump_topology(top).strip().splitlines()
    assert len(cells) == top.n_nodes + 1
    assert cells[1].split("\t")[3] == "0"
