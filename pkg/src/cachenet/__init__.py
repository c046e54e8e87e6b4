"""Desk-scale laboratory for throughput scaling of cache-enabled wireless networks."""

from .analytics import (CapacityBreakdown, Regime, ServerProbability,
                        expected_hops_asymptotic, expected_hops_exact,
                        expected_hops_pathwise_unconditional, fit_power_exponent,
                        max_throughput, no_cache_baseline, server_probability,
                        serving_probability_table, supportable_ratio_bound,
                        total_request_rate, total_traffic, transport_capacity)
from .config import (CellMode, ParameterError, Scenario, ScenarioConfig,
                     rate_for_occupancy)
from .discovery import (DiscoveryOutcome, SourceKind, cell_pathwise_discover,
                        flood_discover, pathwise_discover)
from .montecarlo import (MetricsReport, balls_into_bins_max_load,
                         estimate_discovery_metrics, estimate_serving_load,
                         estimate_supported_throughput, sample_cache_field,
                         sample_cache_field_ctmc)
from .occupancy import (OccupancyState, ctmc_path, occupancy_threshold,
                        simulate_occupancy_ctmc, steady_state_occupancy)
from .sweep import Axis, SweepSpec, fit_report, run_sweep
from .topology import (GridTopology, RandomCellTopology, build_cell_grid,
                       build_grid, build_random, dump_topology)

__version__ = "0.1.0"
