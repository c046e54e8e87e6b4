"""Two-state cache occupancy: closed form and continuous-time simulation.

Each node's possession of the single content is an alternating renewal
process: empty periods are Exp(lam) (time until the node requests and
receives the content), holding periods are Exp(mu) (time until the copy
expires).  The long-run occupied fraction is lam / (lam + mu).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ParameterError, Scenario

_CHUNK = 8192


@dataclass(frozen=True)
class OccupancyState:
    """State of one node's chain right after a transition."""

    has_content: bool
    last_transition_time: float


def steady_state_occupancy(lam: float, mu: float) -> float:
    """Long-run probability that a node holds the content: lam / (lam + mu)."""
    if lam <= 0 or mu <= 0:
        raise ParameterError(f"rates must be positive, got lam={lam} mu={mu}")
    return lam / (lam + mu)


def occupancy_threshold(scenario: Scenario, n: int) -> float:
    """Occupancy level separating cache-dominated from server-dominated capacity.

    n^(-1/2) on the grid, 1/log(n) on the random network.
    """
    if n < 4:
        raise ParameterError(f"need at least 4 nodes, got {n}")
    if scenario.is_grid:
        return n ** -0.5
    return 1.0 / math.log(n)


def _interval_chunks(lam: float, mu: float, rng: np.random.Generator):
    # Chains strictly alternate, so the path is fully described by a stream of
    # (empty duration, holding duration) pairs; drawing them in fixed-size
    # chunks keeps simulate_occupancy_ctmc and ctmc_path on the same stream.
    while True:
        empty = rng.exponential(1.0 / lam, _CHUNK)
        held = rng.exponential(1.0 / mu, _CHUNK)
        yield empty, held


def simulate_occupancy_ctmc(lam: float, mu: float, horizon: float, seed) -> float:
    """Fraction of [0, horizon] that the chain spends holding the content.

    The chain starts empty.  Deterministic for a fixed seed.  The horizon
    should be much longer than 1/min(lam, mu) for the estimate to mean
    anything.
    """
    if lam <= 0 or mu <= 0:
        raise ParameterError(f"rates must be positive, got lam={lam} mu={mu}")
    if horizon <= 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    rng = np.random.default_rng(seed)
    t = 0.0
    occupied = 0.0
    for empty, held in _interval_chunks(lam, mu, rng):
        draws = np.empty(2 * _CHUNK)
        draws[0::2] = empty
        draws[1::2] = held
        ends = t + np.cumsum(draws)
        if ends[-1] < horizon:
            occupied += held.sum()
            t = ends[-1]
            continue
        k = int(np.searchsorted(ends, horizon))
        occupied += draws[1:k:2].sum()
        if k % 2 == 1:  # horizon interrupts a holding interval
            occupied += horizon - (ends[k] - draws[k])
        return occupied / horizon
    raise AssertionError("unreachable")


def ctmc_path(lam: float, mu: float, horizon: float, seed) -> list[OccupancyState]:
    """Explicit sample path: one entry per transition inside [0, horizon].

    Consumes the generator stream exactly like simulate_occupancy_ctmc, so the
    occupied fraction implied by the returned path matches the estimator for
    the same seed.
    """
    if lam <= 0 or mu <= 0:
        raise ParameterError(f"rates must be positive, got lam={lam} mu={mu}")
    if horizon <= 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    rng = np.random.default_rng(seed)
    t = 0.0
    path: list[OccupancyState] = []
    for empty, held in _interval_chunks(lam, mu, rng):
        for e, h in zip(empty, held):
            t += e
            if t >= horizon:
                return path
            path.append(OccupancyState(True, t))
            t += h
            if t >= horizon:
                return path
            path.append(OccupancyState(False, t))
    raise AssertionError("unreachable")


def occupied_fraction_of_path(path: list[OccupancyState], horizon: float) -> float:
    """Time-weighted occupied fraction implied by a transition path."""
    occupied = 0.0
    state, since = False, 0.0
    for entry in path:
        if state:
            occupied += entry.last_transition_time - since
        state, since = entry.has_content, entry.last_transition_time
    if state:
        occupied += horizon - since
    return occupied / horizon
