"""Command-line harness: sweeps, fits, plots, invariant checks, topology dumps.

Exit codes: 0 success, 1 parameter error, 2 I/O error, 3 invariant-check
failure (validate only).  A flat key=value config file can pre-fill any flag;
explicit flags win.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analytics
from .config import (CellMode, ParameterError, Scenario, ScenarioConfig,
                     rate_for_occupancy)
from .discovery import (SourceKind, flood_discover, flood_discover_ringwalk,
                        pathwise_discover)
from .montecarlo import sample_cache_field, trial_rng
from .occupancy import simulate_occupancy_ctmc, steady_state_occupancy
from .plotting import PLOT_KINDS, emit_plot
from .sweep import Axis, SweepSpec, fit_report, render_fit_report, run_sweep
from .topology import build_grid, build_random, dump_topology

_SCENARIOS = {s.value: s for s in Scenario}
_MODES = {m.value: m for m in CellMode}


def load_config_file(path) -> dict:
    """Flat key=value pairs, # starts a comment; values stay strings."""
    values = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{line_no}: expected key=value, got {raw!r}")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="key=value file pre-filling any flag")
    parser.add_argument("--scenario", choices=sorted(_SCENARIOS),
                        help="discovery scenario (default grid_pathwise)")
    parser.add_argument("--n", type=int, help="node count (default 1024)")
    parser.add_argument("--lambda", dest="lam", type=float,
                        help="per-node request rate (default 1.0)")
    parser.add_argument("--mu", type=float, help="cache drop rate (default 1.0)")
    parser.add_argument("--ratio", type=float,
                        help="request/drop ratio; overrides --lambda with mu=1")
    parser.add_argument("--trials", type=int, help="single-request trials (default 1000)")
    parser.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    parser.add_argument("--mode", choices=sorted(_MODES),
                        help="cell topology mode (default idealized)")
    parser.add_argument("--out", help="output path")


_DEFAULTS = dict(scenario="grid_pathwise", n=1024, lam=1.0, mu=1.0, ratio=None,
                 trials=1000, seed=0, mode="idealized", out=None)


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, default in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            if key in file_values:
                raw = file_values[key]
                cast = type(default) if default is not None else str
                if key == "ratio":
                    cast = float
                elif key in ("n", "trials", "seed"):
                    cast = int
                elif key in ("lam", "mu"):
                    cast = float
                setattr(args, key, cast(raw))
            else:
                setattr(args, key, default)
    for key, raw in file_values.items():
        if getattr(args, key, None) is None:
            setattr(args, key, raw)
    if args.ratio is not None:
        args.lam, args.mu = float(args.ratio), 1.0
    return args


def _base_config(args) -> ScenarioConfig:
    return ScenarioConfig(
        scenario=_SCENARIOS[args.scenario], n=args.n, lam=args.lam, mu=args.mu,
        seed=args.seed, trials=args.trials,
    )


def _cmd_sweep(args) -> int:
    args = _merge(args)
    if args.out is None:
        raise ParameterError("sweep needs --out for the CSV table")
    points = tuple(float(p) for p in str(args.points).split(",") if p)
    if args.axis == "n":
        points = tuple(int(p) for p in points)
    scenarios = tuple(_SCENARIOS[s] for s in args.scenarios.split(",")) if args.scenarios else ()
    spec = SweepSpec(
        base=_base_config(args), axis=Axis(args.axis), points=points,
        scenarios=scenarios, mode=_MODES[args.mode],
        load_trials=args.load_trials, interior_margin=args.interior_margin,
    )
    run_sweep(spec, out_path=args.out, workers=args.workers)
    print(f"wrote {len(spec.scenarios) * len(spec.points)} rows to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    summary = fit_report(args.csv)
    sys.stdout.write(render_fit_report(summary))
    return 0


def _cmd_plot(args) -> int:
    args = _merge(args)
    if args.out is None:
        raise ParameterError("plot needs --out for the figure file")
    emit_plot(args.csv, args.kind, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_dump_topology(args) -> int:
    args = _merge(args)
    scenario = _SCENARIOS[args.scenario]
    if scenario.is_grid:
        top = build_grid(args.n)
    else:
        top = build_random(args.n, _MODES[args.mode], seed=args.seed)
    text = dump_topology(top)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {top.n_nodes} nodes to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _validate_checks():
    yield ("occupancy closed form vs chain simulation",
           lambda: abs(simulate_occupancy_ctmc(1.0, 1.0, 2e5, 7) - 0.5) < 0.02)
    yield ("occupancy ratio invariance",
           lambda: steady_state_occupancy(3.0, 2.0) == steady_state_occupancy(30.0, 20.0))

    def metric_properties():
        grid = build_grid(225)
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b, c = (int(x) for x in rng.integers(0, grid.n, 3))
            if grid.hop_distance(a, b) != grid.hop_distance(b, a):
                return False
            if grid.hop_distance(a, c) > grid.hop_distance(a, b) + grid.hop_distance(b, c):
                return False
            if grid.hop_distance(a, a) != 0:
                return False
        return True
    yield ("hop metric symmetry and triangle inequality", metric_properties)

    def path_consistency():
        grid = build_grid(169)
        for v in range(grid.n):
            path = grid.path_to_server(v)
            if len(path) != grid.hop_distance(v, grid.server):
                return False
            remaining = [grid.hop_distance(p, grid.server) for p in path]
            if any(b != a - 1 for a, b in zip([len(path)] + remaining, remaining)):
                return False
        return True
    yield ("server paths shrink one hop at a time", path_consistency)

    def discovery_degenerate():
        grid = build_grid(81)
        ones = np.ones(grid.n, bool)
        zeros = np.zeros(grid.n, bool)
        v = 3
        ok = pathwise_discover(grid, ones, v).hops == 1
        ok &= flood_discover(grid, ones, v).hops == 1
        ok &= pathwise_discover(grid, zeros, v).source is SourceKind.SERVER
        ok &= flood_discover(grid, zeros, v).source is SourceKind.SERVER
        return bool(ok)
    yield ("degenerate fields resolve exactly", discovery_degenerate)

    def flood_reference():
        grid = build_grid(121)
        for t in range(40):
            rng = trial_rng(11, t)
            flags = sample_cache_field(grid, 0.15, rng)
            v = int(rng.integers(grid.n))
            a = flood_discover(grid, flags, v)
            b = flood_discover_ringwalk(grid, flags, v)
            if (a.hops, a.source, a.source_node) != (b.hops, b.source, b.source_node):
                return False
        return True
    yield ("ring flooding agrees with ring-walk reference", flood_reference)

    def capacity_identity():
        for scenario, n in ((Scenario.GRID_PATHWISE, 625),
                            (Scenario.GRID_FLOODING, 625),
                            (Scenario.RANDOM_CELL_PATHWISE, 4096)):
            for rho in (0.05, 0.3, 0.7):
                cb = analytics.max_throughput(scenario, n, rho, 2.0)
                demand = n * (1 - rho) * ((1 - cb.p_s) * cb.h_bar + cb.p_s * cb.h_bar_s)
                if abs(cb.gamma_max * demand - cb.transport) > 1e-9 * cb.transport:
                    return False
        return True
    yield ("throughput identity reproduces transport capacity", capacity_identity)

    def exponent_recovery():
        xs = [1.5 ** k for k in range(8)]
        slope, err = analytics.fit_power_exponent([(x, 3.0 * x ** -2.25) for x in xs])
        return abs(slope + 2.25) < 1e-9 and err < 1e-9
    yield ("power-law fit recovers a planted exponent", exponent_recovery)

    def sweep_determinism():
        base = ScenarioConfig(Scenario.GRID_PATHWISE, 81,
                              rate_for_occupancy(0.3), 1.0, trials=200, seed=5)
        spec = SweepSpec(base=base, axis=Axis.RHO, points=(0.2, 0.5), load_trials=5)
        return run_sweep(spec) == run_sweep(spec)
    yield ("sweep rows replay identically", sweep_determinism)


def _cmd_validate(_args) -> int:
    failures = 0
    for name, check in _validate_checks():
        try:
            ok = bool(check())
        except Exception as exc:  # a crashing check is a failing check
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} check(s) failed")
        return 3
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachenet",
        description="Cache-network capacity laboratory: sweeps, fits, plots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a configuration sweep to CSV")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=[a.value for a in Axis], required=True)
    p_sweep.add_argument("--points", required=True,
                         help="comma-separated axis values, strictly increasing")
    p_sweep.add_argument("--scenarios",
                         help="comma-separated scenario list (default: --scenario)")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--load-trials", type=int, default=30,
                         help="synchronized request epochs per point")
    p_sweep.add_argument("--interior-margin", type=int, default=0,
                         help="also estimate flooding hops for interior requesters")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fit = sub.add_parser("fit", help="fit scaling exponents from a sweep CSV")
    p_fit.add_argument("--csv", required=True)
    p_fit.set_defaults(func=_cmd_fit)

    p_plot = sub.add_parser("plot", help="render a sweep CSV as a vector figure")
    _add_common(p_plot)
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p_plot.set_defaults(func=_cmd_plot)

    p_val = sub.add_parser("validate", help="run the fast invariant suite")
    p_val.set_defaults(func=_cmd_validate)

    p_dump = sub.add_parser("dump-topology", help="write the node/cell listing")
    _add_common(p_dump)
    p_dump.set_defaults(func=_cmd_dump_topology)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
