"""Configuration sweeps: simulation vs closed forms, CSV output, exponent fits."""

from __future__ import annotations

import csv
import math
import multiprocessing
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import analytics
from .config import (CellMode, ParameterError, Scenario, ScenarioConfig,
                     nearest_square, rate_for_occupancy)
from .montecarlo import (CSV_COLUMNS, Z95, _fmt, estimate_discovery_metrics,
                         estimate_serving_load)
from .occupancy import occupancy_threshold
from .topology import build_grid, build_random


class Axis(Enum):
    N = "n"
    RATIO = "ratio"
    RHO = "rho"


SWEEP_COLUMNS = CSV_COLUMNS + [
    "h_bar_exact", "p_s_exact", "h_bar_s", "transport", "gamma_baseline",
    "rho_threshold", "ratio_bound", "total_request_rate", "total_traffic",
    "regime", "n_nodes", "trials", "w_bandwidth", "b_content",
    "h_bar_interior", "h_bar_interior_ci95",
]


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a base operating point, an axis, and the points to visit.

    Points must be strictly increasing; grid scenarios on the N axis only
    accept perfect squares.  Monte Carlo cost per point is base.trials single
    requests plus load_trials synchronized epochs.
    """

    base: ScenarioConfig
    axis: Axis
    points: tuple
    scenarios: tuple = ()
    mode: CellMode = CellMode.IDEALIZED
    load_trials: int = 30
    interior_margin: int = 0

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ParameterError("sweep needs at least one point")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ParameterError("sweep points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        scenarios = tuple(self.scenarios) or (self.base.scenario,)
        object.__setattr__(self, "scenarios", scenarios)
        if self.load_trials < 1:
            raise ParameterError("load_trials must be >= 1")
        if self.axis is Axis.N:
            for sc in scenarios:
                if not sc.is_grid:
                    continue
                for p in pts:
                    v = int(p)
                    if math.isqrt(v) ** 2 != v:
                        raise ParameterError(
                            f"grid N-sweep point {v} is not a perfect square "
                            f"(nearest valid value: {nearest_square(v)})"
                        )
        elif self.axis is Axis.RHO:
            for p in pts:
                if not 0.0 < p < 1.0:
                    raise ParameterError(f"rho sweep point {p} outside (0,1)")
        else:
            for p in pts:
                if p <= 0:
                    raise ParameterError(f"ratio sweep point {p} must be positive")


def _point_seed(base_seed: int, scenario_index: int, point_index: int) -> int:
    # Decouples the streams of different sweep cells regardless of worker count.
    state = np.random.SeedSequence([base_seed, scenario_index, point_index]).generate_state(1)
    return int(state[0])


def _point_config(spec: SweepSpec, scenario: Scenario, si: int, pi: int) -> ScenarioConfig:
    value = spec.points[pi]
    seed = _point_seed(spec.base.seed, si, pi)
    common = dict(w_bandwidth=spec.base.w_bandwidth, b_content=spec.base.b_content,
                  seed=seed, trials=spec.base.trials)
    if spec.axis is Axis.N:
        return ScenarioConfig(scenario, int(value), spec.base.lam, spec.base.mu, **common)
    if spec.axis is Axis.RATIO:
        # Only the ratio matters for occupancy; mu is pinned to 1 so the
        # absolute-rate columns are reported in drop-rate units.
        return ScenarioConfig(scenario, spec.base.n, float(value), 1.0, **common)
    lam = rate_for_occupancy(float(value), spec.base.mu)
    return ScenarioConfig(scenario, spec.base.n, lam, spec.base.mu, **common)


def _build_topology(spec: SweepSpec, config: ScenarioConfig):
    if config.scenario.is_grid:
        return build_grid(config.n)
    return build_random(config.n, spec.mode, seed=config.seed)


def _point_row(task) -> list[str]:
    spec, si, pi = task
    scenario = spec.scenarios[si]
    config = _point_config(spec, scenario, si, pi)
    topology = _build_topology(spec, config)

    disc = estimate_discovery_metrics(config, topology)
    load = estimate_serving_load(config.with_(trials=spec.load_trials), topology)
    cb = analytics.max_throughput(scenario, config.n, config.rho, config.w_bandwidth)

    interior = None
    if scenario is Scenario.GRID_FLOODING and spec.interior_margin > 0:
        interior = estimate_discovery_metrics(config, topology,
                                              interior_margin=spec.interior_margin)

    values = {
        "scenario": scenario.value,
        "n": config.n,
        "lambda": config.lam,
        "mu": config.mu,
        "rho": config.rho,
        "h_bar_cond": disc.h_bar_cond,
        "h_bar_uncond": disc.h_bar_uncond,
        "p_s": disc.p_s_est,
        "max_load": load.max_load,
        "gamma_sim": load.gamma_sim,
        "gamma_analytic": cb.gamma_max,
        "h_bar_cond_ci95": Z95 * disc.h_bar_cond_se,
        "h_bar_uncond_ci95": Z95 * disc.h_bar_uncond_se,
        "p_s_ci95": Z95 * disc.p_s_se,
        "seed": config.seed,
        "h_bar_exact": cb.h_bar,
        "p_s_exact": cb.p_s,
        "h_bar_s": cb.h_bar_s,
        "transport": cb.transport,
        "gamma_baseline": analytics.no_cache_baseline(scenario, config.n, config.w_bandwidth),
        "rho_threshold": occupancy_threshold(scenario, config.n),
        "ratio_bound": (analytics.supportable_ratio_bound(scenario, config.n)
                        if config.n >= 16 else None),
        "total_request_rate": analytics.total_request_rate(config.n, config.lam, config.mu),
        "total_traffic": analytics.total_traffic(config.n, config.lam, config.mu,
                                                 config.b_content, scenario),
        "regime": cb.regime.value,
        "n_nodes": topology.n_nodes,
        "trials": config.trials,
        "w_bandwidth": config.w_bandwidth,
        "b_content": config.b_content,
        "h_bar_interior": interior.h_bar_uncond if interior else None,
        "h_bar_interior_ci95": Z95 * interior.h_bar_uncond_se if interior else None,
    }
    return [_fmt(values[col]) if not isinstance(values[col], str) else values[col]
            for col in SWEEP_COLUMNS]


def run_sweep(spec: SweepSpec, out_path=None, workers: int = 1) -> list[list[str]]:
    """Evaluate every (scenario, point) cell; rows come back in spec order.

    Results are bit-identical for any worker count: each cell derives its RNG
    streams from (base seed, scenario index, point index) alone, and rows are
    collected in submission order.
    """
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    tasks = [(spec, si, pi)
             for si in range(len(spec.scenarios))
             for pi in range(len(spec.points))]
    if workers == 1:
        rows = [_point_row(t) for t in tasks]
    else:
        with multiprocessing.Pool(workers) as pool:
            rows = pool.map(_point_row, tasks)
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            writer.writerows(rows)
    return rows


def read_rows(csv_path) -> list[dict]:
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParameterError(f"no data rows in {csv_path}")
    return rows


def _floats(rows, col):
    missing = [r for r in rows if not r.get(col)]
    if missing:
        raise ParameterError(f"column {col} missing or empty in sweep output")
    return np.array([float(r[col]) for r in rows])


def fit_report(rows_or_path) -> dict:
    """Scaling summary of a sweep: exponents on the grid, constancy on cells.

    Grid scenarios with a varying n get the log-log slope of gamma against n
    (reference: -1/2).  The cell scenario gets the coefficient of variation of
    gamma * log n (reference: 0).  A varying occupancy adds the fitted hop
    exponent for flooding next to the 0.4646 reference.  Needs at least four
    points on the fitted axis.
    """
    rows = read_rows(rows_or_path) if not isinstance(rows_or_path, list) else rows_or_path
    summary: dict = {}
    for scenario in sorted({r["scenario"] for r in rows}):
        sub = [r for r in rows if r["scenario"] == scenario]
        entry: dict = {"points": len(sub)}
        ns = _floats(sub, "n")
        gammas = _floats(sub, "gamma_analytic")
        sims = _floats(sub, "gamma_sim")
        rhos = _floats(sub, "rho")
        entry["sim_to_analytic"] = [float((sims / gammas).min()), float((sims / gammas).max())]
        if len(set(ns.tolist())) >= 4:
            if Scenario(scenario).is_grid:
                slope, stderr = analytics.fit_power_exponent(zip(ns, gammas))
                entry["gamma_vs_n_slope"] = slope
                entry["gamma_vs_n_stderr"] = stderr
                entry["gamma_vs_n_reference"] = -0.5
                sim_slope, _ = analytics.fit_power_exponent(zip(ns, sims))
                entry["gamma_sim_vs_n_slope"] = sim_slope
            else:
                scaled = gammas * np.log(ns)
                entry["gamma_logn_cv"] = float(scaled.std() / scaled.mean())
                entry["gamma_logn_reference_cv"] = 0.0
        elif len(set(rhos.tolist())) >= 4:
            hbars = _floats(sub, "h_bar_exact")
            slope, stderr = analytics.fit_power_exponent(zip(rhos, hbars))
            entry["h_bar_vs_rho_slope"] = slope
            entry["h_bar_vs_rho_stderr"] = stderr
            if Scenario(scenario) is Scenario.GRID_FLOODING:
                entry["h_bar_vs_rho_reference"] = -analytics.FLOODING_HOP_EXPONENT
        else:
            raise ParameterError(
                f"fit needs at least 4 points on a varying axis for {scenario}")
        summary[scenario] = entry
    return summary


def render_fit_report(summary: dict) -> str:
    lines = []
    for scenario, entry in summary.items():
        lines.append(f"{scenario}: {entry['points']} points")
        for key in sorted(k for k in entry if k not in ("points",)):
            val = entry[key]
            if isinstance(val, list):
                lines.append(f"  {key} = [{val[0]:.6g}, {val[1]:.6g}]")
            else:
                lines.append(f"  {key} = {val:.6g}")
    return "\n".join(lines) + "\n"
