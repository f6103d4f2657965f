"""Simulator and analysis toolkit for P2P streaming over random Hamiltonian cycle overlays."""

from cyclecast.overlay import Overlay, init_network, random_churn
from cyclecast.dissemination import (
    StreamConfig,
    DeliveryLog,
    StreamSimulation,
    assign_color,
    scheduled_action,
    run,
    check_freshness_invariant,
    check_delay_bound,
    check_throughput,
)
from cyclecast.flowgraph import (
    FlowGraph,
    FgcTrace,
    extract_flow_graph,
    fgc_construct,
    superpose,
    bfs_distances,
    reverse,
    depth,
    expansion_series,
    expected_remaining,
    random_hamiltonian_cycle,
    sample_thinned_pair,
)
from cyclecast.stats import (
    ExperimentReport,
    layer_uniformity_test,
    fgc_equivalence_test,
    expansion_mean_test,
    concentration_test,
    depth_scaling_experiment,
    contraction_test,
    diameter_symmetry_test,
)

__version__ = "0.1.0"

__all__ = [
    "Overlay",
    "init_network",
    "random_churn",
    "StreamConfig",
    "DeliveryLog",
    "StreamSimulation",
    "assign_color",
    "scheduled_action",
    "run",
    "check_freshness_invariant",
    "check_delay_bound",
    "check_throughput",
    "FlowGraph",
    "FgcTrace",
    "extract_flow_graph",
    "fgc_construct",
    "superpose",
    "bfs_distances",
    "reverse",
    "depth",
    "expansion_series",
    "expected_remaining",
    "random_hamiltonian_cycle",
    "sample_thinned_pair",
    "ExperimentReport",
    "layer_uniformity_test",
    "fgc_equivalence_test",
    "expansion_mean_test",
    "concentration_test",
    "depth_scaling_experiment",
    "contraction_test",
    "diameter_symmetry_test",
    "__version__",
]
