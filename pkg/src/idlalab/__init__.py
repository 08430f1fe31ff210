"""Aggregation and random-walk experiments on supercritical percolation clusters.

The package grows internal aggregates with blind walks on finite graphs,
solves the matching killed-walk linear systems exactly, and checks the
regularity lemmas (Harnack, oscillation decay, Green and exit-time bounds,
domination, excursions, escape conductance, kernel decay, truncation) that
tie the two together.
"""

from .checks import (
    BERNOULLI_SIGMAS,
    MC_SIGMAS,
    CheckReport,
    carne_varopoulos_check,
    default_suite,
    domination_check,
    escape_conductance_check,
    excursion_check,
    exit_regularity_check,
    green_regularity_check,
    harnack_check,
    heat_kernel_decay_check,
    oscillation_check,
    read_reports,
    truncation_check,
    write_reports,
)
from .config import RunManifest, build_graph, load_config, read_manifest, validate_config
from .errors import (
    AggregationStalled,
    ConditioningFailed,
    ConstructionError,
    IdlalabError,
    InputError,
    RangeError,
    ResourceError,
    SolverError,
)
from .idla import (
    Aggregate,
    MLStats,
    ShapeResult,
    ShapeRun,
    coverage,
    inner_radius,
    ml_statistics,
    read_aggregate,
    run_idla,
    safe_capacity,
    shape_experiment,
    write_aggregate,
)
from .lattice import (
    ChemicalScan,
    ClusterGraph,
    DensityProfile,
    PercolationConfig,
    PercolationSample,
    ball_vertices,
    box_vertices,
    build_counterexample,
    chemical_ratio_scan,
    counterexample_metadata,
    density_profile,
    distances_from,
    extract_cluster,
    full_lattice,
    graph_distance,
    load_graph,
    sample_percolation,
    save_graph,
    unit_ball_volume,
)
from .solver import (
    DirichletSolution,
    GreenTable,
    HeatKernelTable,
    KilledKernel,
    build_killed_kernel,
    exact_escape_probability,
    exact_exit_time,
    exact_green,
    exact_hit_prob,
    heat_kernel_powers,
    solve_dirichlet,
    write_value_csv,
)
from .streams import Stream, edge_uniforms, stream_key, walk_keys
from .walks import (
    Estimate,
    WalkResult,
    blind_step_distribution,
    default_cap,
    endpoint_sample,
    escape_probability_mc,
    estimate_exit_time,
    estimate_green,
    estimate_hit_prob,
    exit_times,
    hit_flags_from_each,
    region_mask,
    run_walk,
    simple_step_distribution,
    stay_probability,
    survival_fractions,
)

__version__ = "0.1.0"
