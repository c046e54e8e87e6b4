"""Monte Carlo estimators for hop counts, server probability, and load.

Cache fields are sampled as independent Bernoulli(rho) snapshots, which the
steady-state independence of the per-node chains justifies; a full
continuous-time field sampler exists for cross-validation at small n.  Every
trial owns an RNG stream derived from (seed, trial index), so results never
depend on execution order and replay bit-identically.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .config import ParameterError, Scenario, ScenarioConfig
from .discovery import (cell_pathwise_discover, flood_discover,
                        flood_discover_ringwalk, pathwise_discover)
from .topology import GridTopology, RandomCellTopology

_MAX_FIELD_RETRIES = 1000
_PATH_CHUNK = 2048


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, stable under parallel scheduling."""
    return np.random.default_rng([seed, trial])


def sample_cache_field(topology, rho: float, rng) -> np.ndarray:
    """Independent Bernoulli(rho) possession flags, one per node."""
    if not 0.0 <= rho <= 1.0:
        raise ParameterError(f"occupancy must lie in [0,1], got {rho}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.random(topology.n_nodes) < rho


def sample_cache_field_ctmc(topology, lam: float, mu: float, t_sample: float, rng) -> np.ndarray:
    """Field obtained by running every node's on/off chain from empty to t_sample.

    Cross-validation path for the snapshot sampler; meant for small networks
    (the per-node chains are simulated transition by transition).
    """
    if lam <= 0 or mu <= 0:
        raise ParameterError(f"rates must be positive, got lam={lam} mu={mu}")
    if t_sample <= 0:
        raise ParameterError(f"sampling time must be positive, got {t_sample}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = topology.n_nodes
    remaining = np.full(n, float(t_sample))
    state = np.zeros(n, dtype=bool)
    undecided = np.ones(n, dtype=bool)
    while True:
        idx = np.flatnonzero(undecided)
        if idx.size == 0:
            return state
        scale = np.where(state[idx], 1.0 / mu, 1.0 / lam)
        dur = rng.exponential(scale)
        crossed = dur >= remaining[idx]
        undecided[idx[crossed]] = False
        keep = idx[~crossed]
        remaining[keep] -= dur[~crossed]
        state[keep] = ~state[keep]


@dataclass
class MetricsReport:
    """Estimates from repeated discovery trials (and, optionally, load epochs)."""

    scenario: Scenario
    n: int
    n_nodes: int
    lam: float
    mu: float
    rho: float
    trials: int
    seed: int
    h_bar_cond: float = math.nan        # mean hops, cache-served trials only
    h_bar_cond_se: float = 0.0
    h_bar_uncond: float = math.nan      # mean download distance over all trials
    h_bar_uncond_se: float = 0.0
    p_s_est: float = math.nan
    p_s_se: float = 0.0
    server_hops_mean: float = math.nan
    probed_mean: float = math.nan
    cache_count: int = 0
    server_count: int = 0
    hop_histogram: Counter = field(default_factory=Counter)        # all trials
    cache_hop_histogram: Counter = field(default_factory=Counter)  # cache-served only
    max_load: float | None = None       # median of per-epoch maxima
    max_loads: list | None = None
    server_load_mean: float | None = None
    relay_load_est: float | None = None
    load_histogram: Counter | None = None
    gamma_sim: float | None = None
    gamma_analytic: float | None = None


CSV_COLUMNS = [
    "scenario", "n", "lambda", "mu", "rho",
    "h_bar_cond", "h_bar_uncond", "p_s", "max_load", "gamma_sim", "gamma_analytic",
    "h_bar_cond_ci95", "h_bar_uncond_ci95", "p_s_ci95", "seed",
]

Z95 = 1.959963984540054


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return format(x, ".12g")
    return str(x)


def report_csv_row(report: MetricsReport) -> list[str]:
    """Flat CSV row in the documented column order (see CSV_COLUMNS)."""
    return [
        report.scenario.value, _fmt(report.n), _fmt(report.lam), _fmt(report.mu),
        _fmt(report.rho), _fmt(report.h_bar_cond), _fmt(report.h_bar_uncond),
        _fmt(report.p_s_est), _fmt(report.max_load), _fmt(report.gamma_sim),
        _fmt(report.gamma_analytic), _fmt(Z95 * report.h_bar_cond_se),
        _fmt(Z95 * report.h_bar_uncond_se), _fmt(Z95 * report.p_s_se), _fmt(report.seed),
    ]


def _interior_pool_mask(topology, interior_margin: int) -> np.ndarray | None:
    if interior_margin <= 0 or not isinstance(topology, GridTopology):
        return None
    side = topology.side
    if 2 * interior_margin >= side:
        raise ParameterError(f"margin {interior_margin} leaves no interior on side {side}")
    ax = (np.arange(side) >= interior_margin) & (np.arange(side) <= side - 1 - interior_margin)
    return (ax[None, :] & ax[:, None]).reshape(-1)


def _draw_field_and_requester(topology, rho, rng, pool_mask, field_sampler=None):
    n = topology.n_nodes
    for _ in range(_MAX_FIELD_RETRIES):
        flags = field_sampler(rng) if field_sampler is not None else rng.random(n) < rho
        # Rejection-sample the requester: uniform over the eligible set of
        # this field, without materializing the set (the trial hot path).
        for _ in range(64):
            v = int(rng.integers(n))
            if not flags[v] and (pool_mask is None or pool_mask[v]):
                return flags, v
        eligible = ~flags if pool_mask is None else (~flags & pool_mask)
        pool = np.flatnonzero(eligible)
        if pool.size:
            return flags, int(pool[rng.integers(pool.size)])
    raise ParameterError("could not draw a requester lacking the content; occupancy too close to 1")


def estimate_discovery_metrics(config: ScenarioConfig, topology, *,
                               interior_margin: int = 0, debug: bool = False,
                               field_mode: str = "snapshot",
                               ctmc_horizon: float | None = None) -> MetricsReport:
    """Repeated single-request trials: hop estimates, server frequency, histograms.

    Each trial draws a fresh field and a requester uniform among nodes lacking
    the content (all-holder fields are redrawn).  interior_margin > 0
    restricts grid requesters to nodes at least that far from every border,
    which keeps flooding rings untruncated.  debug re-checks each flooding
    trial against the ring-walk reference.

    field_mode selects the snapshot sampler (default) or "ctmc", which runs
    every node's on/off chain to a near-stationary horizon per trial; the
    chain mode cross-validates the snapshot shortcut and is only sensible for
    small networks.
    """
    rho = config.rho
    if field_mode == "snapshot":
        field_sampler = None
    elif field_mode == "ctmc":
        horizon = ctmc_horizon if ctmc_horizon is not None else 50.0 / min(config.lam, config.mu)
        field_sampler = lambda rng: sample_cache_field_ctmc(
            topology, config.lam, config.mu, horizon, rng)
    else:
        raise ParameterError(f"unknown field mode {field_mode!r}")
    pool_mask = _interior_pool_mask(topology, interior_margin)
    hop_hist: Counter = Counter()
    cache_hist: Counter = Counter()
    cache_sum = cache_sq = 0.0
    all_sum = all_sq = 0.0
    server_sum = 0.0
    probed_sum = 0.0
    cache_count = server_count = 0

    for t in range(config.trials):
        rng = trial_rng(config.seed, t)
        flags, requester = _draw_field_and_requester(topology, rho, rng, pool_mask,
                                                     field_sampler)
        if config.scenario is Scenario.GRID_PATHWISE:
            out = pathwise_discover(topology, flags, requester)
        elif config.scenario is Scenario.GRID_FLOODING:
            out = flood_discover(topology, flags, requester)
            if debug:
                ref = flood_discover_ringwalk(topology, flags, requester)
                assert (out.hops, out.source, out.source_node) == (ref.hops, ref.source, ref.source_node)
        else:
            out = cell_pathwise_discover(topology, flags, requester, rng)
        hop_hist[out.hops] += 1
        all_sum += out.hops
        all_sq += out.hops * out.hops
        probed_sum += out.probed
        if out.from_cache:
            cache_count += 1
            cache_hist[out.hops] += 1
            cache_sum += out.hops
            cache_sq += out.hops * out.hops
        else:
            server_count += 1
            server_sum += out.hops

    trials = config.trials
    report = MetricsReport(
        scenario=config.scenario, n=config.n, n_nodes=topology.n_nodes,
        lam=config.lam, mu=config.mu, rho=rho, trials=trials, seed=config.seed,
        hop_histogram=hop_hist, cache_hop_histogram=cache_hist,
        cache_count=cache_count, server_count=server_count,
        probed_mean=probed_sum / trials,
    )
    p = server_count / trials
    report.p_s_est = p
    report.p_s_se = math.sqrt(p * (1.0 - p) / trials)
    report.h_bar_uncond = all_sum / trials
    report.h_bar_uncond_se = _mean_se(all_sum, all_sq, trials)
    if cache_count:
        report.h_bar_cond = cache_sum / cache_count
        report.h_bar_cond_se = _mean_se(cache_sum, cache_sq, cache_count)
    if server_count:
        report.server_hops_mean = server_sum / server_count
    return report


def _mean_se(total: float, total_sq: float, count: int) -> float:
    if count < 2:
        return 0.0
    var = max(total_sq - total * total / count, 0.0) / (count - 1)
    return math.sqrt(var / count)


# ---------------------------------------------------------------------------
# Synchronized request epochs: every node lacking the content requests at once.
# ---------------------------------------------------------------------------

def _resolve_grid_pathwise(side: int, flags: np.ndarray, requesters: np.ndarray):
    """Vectorized staircase probe for many requesters against one field.

    Returns (hops, source) arrays; source is -1 where the server answers.
    Matches pathwise_discover node for node.
    """
    c = side // 2
    m = requesters.size
    hops = np.zeros(m, dtype=np.int64)
    source = np.full(m, -1, dtype=np.int64)
    for lo in range(0, m, _PATH_CHUNK):
        r = requesters[lo:lo + _PATH_CHUNK]
        xs = r % side
        ys = r // side
        dx = np.abs(xs - c)
        dy = np.abs(ys - c)
        d = dx + dy
        dmax = int(d.max(initial=0))
        if dmax == 0:
            continue
        t = np.arange(1, dmax + 1, dtype=np.int64)[None, :]
        sx = np.sign(c - xs)[:, None]
        sy = np.sign(c - ys)[:, None]
        on_x = t <= dx[:, None]
        px = np.where(on_x, xs[:, None] + sx * t, c)
        py = np.where(on_x, ys[:, None], ys[:, None] + sy * (t - dx[:, None]))
        valid = t <= d[:, None]
        idx = np.where(valid, py * side + px, 0)
        hit = flags[idx] & valid
        any_hit = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        rows = np.arange(r.size)
        hops[lo:lo + r.size] = np.where(any_hit, first + 1, d)
        source[lo:lo + r.size] = np.where(any_hit, idx[rows, first], -1)
    return hops, source


def _resolve_grid_flooding(grid: GridTopology, flags: np.ndarray, requesters: np.ndarray):
    holders = np.flatnonzero(flags)
    m = requesters.size
    hops = np.zeros(m, dtype=np.int64)
    source = np.full(m, -1, dtype=np.int64)
    if holders.size == 0:
        dist = grid.server_distances()
        hops[:] = dist[requesters]
        return hops, source
    hx = holders % grid.side
    hy = holders // grid.side
    for i, r in enumerate(requesters):
        rx, ry = int(r) % grid.side, int(r) // grid.side
        dist = np.abs(hx - rx) + np.abs(hy - ry)
        radius = int(dist.min())
        nearest = holders[dist == radius]
        order = np.lexsort((nearest // grid.side, nearest % grid.side))
        hops[i] = radius
        source[i] = nearest[order[0]]
    return hops, source


def _next_cell_toward_server(top: RandomCellTopology) -> np.ndarray:
    """First cell of every cell's staircase path to the server cell (-1 at the server)."""
    g = top.cell_grid_side
    c = g // 2
    cx = np.arange(g * g) % g
    cy = np.arange(g * g) // g
    nx = np.where(cx != c, cx + np.sign(c - cx), cx)
    ny = np.where(cx != c, cy, cy + np.sign(c - cy))
    nxt = ny * g + nx
    nxt[top.server_cell] = -1
    return nxt


def _resolve_cell_pathwise(top: RandomCellTopology, flags: np.ndarray,
                           requesters: np.ndarray, rng: np.random.Generator):
    """Vectorized cell relay for many requesters against one field.

    Hop semantics match cell_pathwise_discover: round one covers the own cell
    plus the next cell toward the server (source drawn uniformly from the
    union of their holders), later rounds one cell each.
    """
    g = top.cell_grid_side
    holders = np.flatnonzero(flags)
    cnt = np.bincount(top.node_cell[holders], minlength=g * g)
    cell_any = cnt > 0
    grouped = holders[np.argsort(top.node_cell[holders], kind="stable")]
    start = np.searchsorted(top.node_cell[grouped], np.arange(g * g + 1))

    # First holder cell strictly along each cell's path, via the lattice resolver.
    cell_hops, cell_src = _resolve_grid_pathwise(g, cell_any, np.arange(g * g))
    nxt = _next_cell_toward_server(top)
    cell_dist = top.cell_server_distances()

    own = top.node_cell[requesters]
    d = cell_dist[own]
    own_has = cell_any[own]
    path_hit = cell_src[own] >= 0
    next_has = path_hit & (cell_hops[own] == 1)
    hop1 = own_has | next_has
    deeper = ~hop1 & path_hit

    hops = np.where(hop1, 1, np.where(path_hit, cell_hops[own], d))
    source = np.full(requesters.size, -1, dtype=np.int64)

    idx1 = np.flatnonzero(hop1)
    if idx1.size:
        c_own = np.where(own_has[idx1], cnt[own[idx1]], 0)
        next_cell = nxt[own[idx1]]
        c_next = np.where(next_has[idx1], cnt[np.maximum(next_cell, 0)], 0)
        u = rng.integers(0, c_own + c_next)
        from_own = u < c_own
        pick_cell = np.where(from_own, own[idx1], next_cell)
        offset = np.where(from_own, u, u - c_own)
        source[idx1] = grouped[start[pick_cell] + offset]
    idx2 = np.flatnonzero(deeper)
    if idx2.size:
        cell = cell_src[own[idx2]]
        u = rng.integers(0, cnt[cell])
        source[idx2] = grouped[start[cell] + u]
    return hops, source


@dataclass
class EpochAggregate:
    requests: int = 0
    server_count: int = 0
    dist_sum: float = 0.0
    relay_sum: float = 0.0
    max_loads: list = field(default_factory=list)
    server_loads: list = field(default_factory=list)
    load_histogram: Counter = field(default_factory=Counter)


def _run_request_epochs(config: ScenarioConfig, topology, trials: int) -> EpochAggregate:
    """One synchronized epoch per trial: every content-less node requests once."""
    rho = config.rho
    agg = EpochAggregate()
    n_nodes = topology.n_nodes
    for t in range(trials):
        rng = trial_rng(config.seed, t)
        flags = None
        for _ in range(_MAX_FIELD_RETRIES):
            flags = rng.random(n_nodes) < rho
            requesters = np.flatnonzero(~flags)
            if requesters.size:
                break
        else:
            raise ParameterError("no requesters available; occupancy too close to 1")
        if config.scenario is Scenario.GRID_PATHWISE:
            hops, source = _resolve_grid_pathwise(topology.side, flags, requesters)
        elif config.scenario is Scenario.GRID_FLOODING:
            hops, source = _resolve_grid_flooding(topology, flags, requesters)
        else:
            hops, source = _resolve_cell_pathwise(topology, flags, requesters, rng)
        served_mask = source >= 0
        served = np.bincount(source[served_mask], minlength=n_nodes)
        agg.requests += requesters.size
        agg.server_count += int((~served_mask).sum())
        agg.dist_sum += float(hops.sum())
        agg.relay_sum += float(np.maximum(hops - 1, 0).sum())
        agg.max_loads.append(int(served.max(initial=0)))
        agg.server_loads.append(int((~served_mask).sum()))
        agg.load_histogram.update(served[served > 0].tolist())
    return agg


def estimate_serving_load(config: ScenarioConfig, topology, *, debug: bool = False) -> MetricsReport:
    """Per-node serving pressure under synchronized request epochs.

    Reports the per-epoch maximum served count (median over trials as
    max_load), server load, an aggregated served-count histogram over serving
    nodes, the mean relay transits per cell (cell scenario), and the implied
    supported throughput.
    """
    agg = _run_request_epochs(config, topology, config.trials)
    report = MetricsReport(
        scenario=config.scenario, n=config.n, n_nodes=topology.n_nodes,
        lam=config.lam, mu=config.mu, rho=config.rho,
        trials=config.trials, seed=config.seed,
    )
    report.max_loads = agg.max_loads
    report.max_load = float(np.median(agg.max_loads))
    report.server_load_mean = agg.server_count / config.trials
    report.load_histogram = agg.load_histogram
    if agg.requests:
        report.p_s_est = agg.server_count / agg.requests
        report.p_s_se = math.sqrt(report.p_s_est * (1.0 - report.p_s_est) / agg.requests)
        report.h_bar_uncond = agg.dist_sum / agg.requests
        report.gamma_sim = _supported_throughput(config, agg)
    if isinstance(topology, RandomCellTopology):
        report.relay_load_est = agg.relay_sum / (topology.n_cells * config.trials)
    if debug:
        assert sum(agg.load_histogram.values()) <= agg.requests
    return report


def _supported_throughput(config: ScenarioConfig, agg: EpochAggregate) -> float:
    mean_dist = agg.dist_sum / agg.requests
    transport = analytics.transport_capacity(config.scenario, config.n, config.w_bandwidth)
    return transport / (config.n * (1.0 - config.rho) * mean_dist)


def estimate_supported_throughput(config: ScenarioConfig, topology) -> float:
    """Download rate the transport capacity sustains at the measured distances.

    transport / [ n (1-rho) * mean download distance per request ], with the
    mean pooled over synchronized epochs; directly comparable to the analytic
    max_throughput.
    """
    agg = _run_request_epochs(config, topology, config.trials)
    if agg.requests == 0:
        raise ParameterError("epochs produced no requests")
    return _supported_throughput(config, agg)


def balls_into_bins_max_load(balls: int, bins: int, trials: int, seed: int) -> np.ndarray:
    """Reference maximum bin load when balls land uniformly at random."""
    if balls < 1 or bins < 1 or trials < 1:
        raise ParameterError("balls, bins, and trials must be positive")
    rng = np.random.default_rng(seed)
    maxima = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        counts = np.bincount(rng.integers(0, bins, size=balls), minlength=bins)
        maxima[t] = counts.max()
    return maxima
