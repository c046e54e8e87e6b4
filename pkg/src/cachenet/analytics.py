"""Closed-form hop counts, server probabilities, and capacity at finite n.

Every function evaluates the finite-n expression as written; asymptotic
companions carry all Theta-constants as 1.  Scenario labels follow the
discovery procedure: GRID_PATHWISE and GRID_FLOODING live on the lattice,
RANDOM_CELL_PATHWISE on the cell-partitioned unit square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import ParameterError, Scenario
from .occupancy import occupancy_threshold, steady_state_occupancy
from .topology import cell_grid_side, grid_mean_center_distance, grid_max_center_distance

FLOODING_HOP_EXPONENT = 0.4646  # reference exponent for the flooding hop count

_BLOCK = 100_000
_TINY = 1e-320


def _check_rho(rho: float):
    if not 0.0 < rho <= 1.0:
        raise ParameterError(f"occupancy must lie in (0,1], got {rho}")


def expected_hops_exact(scenario: Scenario, rho: float, n: int, cap: int | None = None) -> float:
    """Truncated-sum mean hop count to the nearest holder.

    Grid pathwise:  sum_{h=1..sqrt(n)} h rho (1-rho)^(h-1)
    Grid flooding:  sum_{h=1..sqrt(n)} h (1-(1-rho)^(4h)) (1-rho)^(2h(h-1))
    Random cells:   1-(1-rho)^(2 log n) + sum_{h=2..1/r(n)} h (1-rho)^(h log n) (1-(1-rho)^log n)

    cap overrides the truncation limit (used when fitting the flooding
    exponent, where the geometric horizon must not bind).
    """
    _check_rho(rho)
    if n < 4:
        raise ParameterError(f"need at least 4 nodes, got {n}")
    if rho == 1.0:
        return 1.0
    log_q = math.log1p(-rho)

    if scenario is Scenario.RANDOM_CELL_PATHWISE:
        big_l = math.log(n)
        horizon = cap if cap is not None else int(math.sqrt(n / big_l))
        total = -math.expm1(2.0 * big_l * log_q)          # 1 - q^(2 log n)
        miss_one = -math.expm1(big_l * log_q)             # 1 - q^(log n)
        h = 2
        while h <= horizon:
            hh = np.arange(h, min(h + _BLOCK, horizon) + 1, dtype=float)
            terms = hh * np.exp(hh * big_l * log_q) * miss_one
            total += float(terms.sum())
            if terms[-1] < _TINY:
                break
            h = int(hh[-1]) + 1
        return total

    horizon = cap if cap is not None else math.isqrt(n)
    total = 0.0
    h = 1
    while h <= horizon:
        hh = np.arange(h, min(h + _BLOCK, horizon) + 1, dtype=float)
        if scenario is Scenario.GRID_PATHWISE:
            terms = hh * rho * np.exp((hh - 1.0) * log_q)
        else:
            ring_hit = -np.expm1(4.0 * hh * log_q)        # 1 - q^(4h)
            closer_miss = np.exp(2.0 * hh * (hh - 1.0) * log_q)
            terms = hh * ring_hit * closer_miss
        total += float(terms.sum())
        if terms[-1] < _TINY:
            break
        h = int(hh[-1]) + 1
    return total


def expected_hops_asymptotic(scenario: Scenario, rho: float) -> float:
    """Leading-order hop count: 1/rho, rho^-0.4646, or 1."""
    _check_rho(rho)
    if scenario is Scenario.GRID_PATHWISE:
        return 1.0 / rho
    if scenario is Scenario.GRID_FLOODING:
        return rho ** -FLOODING_HOP_EXPONENT
    return 1.0


def expected_hops_pathwise_unconditional(rho: float, n: int) -> float:
    """Exact mean download distance on the finite grid, server fallback included.

    Requests that miss every node on the path are served by the server at the
    full path length, so the per-node mean is (1 - q^d(v)) / rho; the two grid
    axes factorize, which keeps this O(sqrt(n)).
    """
    _check_rho(rho)
    side = math.isqrt(n)
    if side * side != n:
        raise ParameterError(f"grid needs a perfect-square node count, got {n}")
    if rho == 1.0:
        return 1.0 - 1.0 / n  # every node except the center finds a holder one hop away
    q = 1.0 - rho
    axis = np.abs(np.arange(side) - side // 2)
    mean_q_axis = float(np.mean(q ** axis))
    return (1.0 - mean_q_axis ** 2) / rho


class BoundKind(Enum):
    BRACKET = "bracket"
    UPPER_BOUND = "upper_bound"
    FORMULA = "formula"


@dataclass(frozen=True)
class ServerProbability:
    lower: float
    upper: float
    value: float          # point value used downstream (geometric mean of a bracket)
    kind: BoundKind


def server_probability(scenario: Scenario, rho: float, n: int) -> ServerProbability:
    """Probability that a request falls through to the origin server.

    Grid pathwise: bracketed between the full-ring sums truncated at
    h_max/2 and h_max, (1 + sum 4k (1-rho)^k) / n; flooding inherits the
    upper end as a pure upper bound; random cells use the printed relay
    formula clamped to [0,1].
    """
    _check_rho(rho)
    if n < 4:
        raise ParameterError(f"need at least 4 nodes, got {n}")
    q = 1.0 - rho
    if scenario is Scenario.RANDOM_CELL_PATHWISE:
        big_l = math.log(n)
        horizon = int(math.sqrt(n / big_l))
        h = np.arange(2, horizon + 1, dtype=float)
        tail = float(np.sum(4.0 * h * big_l * q ** ((h - 1.0) * big_l))) if horizon >= 2 else 0.0
        value = (1.0 + 5.0 * big_l * q + tail) / n
        value = min(max(value, 0.0), 1.0)
        return ServerProbability(value, value, value, BoundKind.FORMULA)

    side = math.isqrt(n)
    h_max = grid_max_center_distance(side)
    k = np.arange(1, h_max + 1, dtype=float)
    ring_terms = 4.0 * k * q ** k
    upper = (1.0 + float(ring_terms.sum())) / n
    lower = (1.0 + float(ring_terms[: h_max // 2].sum())) / n
    if scenario is Scenario.GRID_FLOODING:
        return ServerProbability(0.0, upper, upper, BoundKind.UPPER_BOUND)
    return ServerProbability(lower, upper, math.sqrt(lower * upper), BoundKind.BRACKET)


def server_probability_asymptotic(scenario: Scenario, rho: float, n: int) -> float:
    """Leading-order server probability: (2-rho)^2/(n rho^2) or (2-rho) log n / n."""
    _check_rho(rho)
    if scenario is Scenario.RANDOM_CELL_PATHWISE:
        return (2.0 - rho) * math.log(n) / n
    return (2.0 - rho) ** 2 / (n * rho * rho)


def transport_capacity(scenario: Scenario, n: int, w_bandwidth: float) -> float:
    """Aggregate bit-distance budget: W sqrt(n) on the grid, W n / log n on cells."""
    if w_bandwidth <= 0:
        raise ParameterError("channel rate must be positive")
    if scenario.is_grid:
        return w_bandwidth * math.sqrt(n)
    return w_bandwidth * n / math.log(n)


def mean_server_hops(scenario: Scenario, n: int) -> float:
    """Mean hop distance to the server: lattice mean, or cell-grid mean."""
    if scenario.is_grid:
        return grid_mean_center_distance(math.isqrt(n))
    return grid_mean_center_distance(cell_grid_side(n))


def max_server_hops(scenario: Scenario, n: int) -> int:
    if scenario.is_grid:
        return grid_max_center_distance(math.isqrt(n))
    return grid_max_center_distance(cell_grid_side(n))


class Regime(Enum):
    CACHE_DOMINATED = "cache_dominated"
    SERVER_DOMINATED = "server_dominated"


@dataclass(frozen=True)
class CapacityBreakdown:
    rho: float
    h_bar: float
    h_bar_s: float
    p_s: float
    transport: float
    gamma_max: float
    regime: Regime


def max_throughput(scenario: Scenario, n: int, rho: float, w_bandwidth: float) -> CapacityBreakdown:
    """Per-node download rate that saturates the transport capacity.

    gamma_max = transport / [ n (1-rho) ((1-p_s) h_bar + p_s h_bar_s) ], with
    the finite-n h_bar and p_s from this module and the exact mean server
    distance of the topology.  The p_s point value is clamped to 1 (the
    truncated ring sums overshoot for occupancies far below threshold).
    """
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"throughput is degenerate at rho={rho}; need 0 < rho < 1")
    h_bar = expected_hops_exact(scenario, rho, n)
    p_s = min(1.0, server_probability(scenario, rho, n).value)
    h_bar_s = mean_server_hops(scenario, n)
    transport = transport_capacity(scenario, n, w_bandwidth)
    demand = n * (1.0 - rho) * ((1.0 - p_s) * h_bar + p_s * h_bar_s)
    regime = (Regime.SERVER_DOMINATED if rho < occupancy_threshold(scenario, n)
              else Regime.CACHE_DOMINATED)
    return CapacityBreakdown(rho, h_bar, h_bar_s, p_s, transport, transport / demand, regime)


def no_cache_baseline(scenario: Scenario, n: int, w_bandwidth: float) -> float:
    """Server-only download rate: W/n on the grid, W/sqrt(n log n) on cells."""
    if w_bandwidth <= 0:
        raise ParameterError("channel rate must be positive")
    if scenario.is_grid:
        return w_bandwidth / n
    return w_bandwidth / math.sqrt(n * math.log(n))


def supportable_ratio_bound(scenario: Scenario, n: int) -> float:
    """Largest request-to-drop ratio the per-node load analysis supports.

    n log log n / log n on the grid; log n log log log n / log log n on the
    random network (positive for every n >= 16, since log log log n changes
    sign at n = e^e).
    """
    if n < 16:
        raise ParameterError(f"ratio bound needs n >= 16, got {n}")
    log_n = math.log(n)
    if scenario.is_grid:
        return n * math.log(log_n) / log_n
    return log_n * math.log(math.log(log_n)) / math.log(log_n)


@dataclass(frozen=True)
class ServingProbability:
    relation: str          # same_cell | path | off_path
    hops: int | None
    probability: float


def serving_probability_table(n: int, rho: float, max_h: int | None = None) -> list[ServingProbability]:
    """Chance that one given holder serves another node's request (cell model).

    Same cell: 1/log n.  On the server path at h hops: (1-rho)^(log n)/log n
    for h = 1, (1-rho)^(h+log n)/log n beyond.  Anywhere else: 0.
    """
    _check_rho(rho)
    big_l = math.log(n)
    horizon = max_h if max_h is not None else int(math.sqrt(n / big_l))
    q = 1.0 - rho
    rows = [ServingProbability("same_cell", None, 1.0 / big_l),
            ServingProbability("path", 1, q ** big_l / big_l)]
    for h in range(2, horizon + 1):
        rows.append(ServingProbability("path", h, q ** (h + big_l) / big_l))
    rows.append(ServingProbability("off_path", None, 0.0))
    return rows


def fit_power_exponent(samples) -> tuple[float, float]:
    """Least-squares slope of log y against log x, with its standard error.

    samples is an iterable of (x, y) pairs, all strictly positive, at least
    three distinct x values.  Returns (slope, stderr); stderr is 0 for an
    exact power law.
    """
    pts = [(float(x), float(y)) for x, y in samples]
    if len(pts) < 3:
        raise ParameterError(f"need at least 3 samples, got {len(pts)}")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ParameterError("power-law fit needs strictly positive samples")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if sxx == 0.0:
        raise ParameterError("need at least two distinct x values")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    residuals = ly - (intercept + slope * lx)
    dof = len(pts) - 2
    stderr = math.sqrt(max(float(residuals @ residuals), 0.0) / dof / sxx)
    return slope, stderr


def total_request_rate(n: int, lam: float, mu: float) -> float:
    """Aggregate request rate lam * n * (1 - rho) at the steady state."""
    rho = steady_state_occupancy(lam, mu)
    return lam * n * (1.0 - rho)


def total_traffic(n: int, lam: float, mu: float, b_content: float, scenario: Scenario) -> float:
    """Aggregate bit-distance per unit time moved by all downloads.

    B * lam * n * (1-rho) * ((1-p_s) h_bar + p_s h_bar_s); saturates at
    n * mu * B as the request rate dominates the drop rate.
    """
    if b_content <= 0:
        raise ParameterError("content size must be positive")
    rho = steady_state_occupancy(lam, mu)
    h_bar = expected_hops_exact(scenario, rho, n)
    p_s = min(1.0, server_probability(scenario, rho, n).value)
    h_bar_s = mean_server_hops(scenario, n)
    return b_content * lam * n * (1.0 - rho) * ((1.0 - p_s) * h_bar + p_s * h_bar_s)
