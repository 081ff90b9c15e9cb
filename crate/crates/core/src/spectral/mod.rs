//! Cell-level approximation of the nonwandering set, its decomposition into
//! basic sets, and the verdicts computed on each set.

mod axiom;
mod basic;
mod classify;
mod graph;
mod grid;
mod periodic;
mod smoothness;

pub use axiom::{verify_axiom_a, AxiomAReport, SetHyperbolicity, DENSITY_THRESHOLD};
pub use basic::{
    basic_set_type, decompose_basic_sets, in_set_branches, BasicSetApprox, Classification,
    SamplingOptions, TypeVote, MIN_TYPE_SAMPLES, REALIZE_STEPS, SEARCH_BUDGET,
};
pub use classify::{
    anchors, check_preimage_purity, classify_attractor, classify_repeller, injectivity_scale,
    omega_limit, uniform_margin, unstable_disk_coverage, verify_expanding_derivative,
    verify_expanding_metric, AttractorReport, DerivativeExpansion, EpsilonTrial, FatteningTrial,
    MetricExpansion, PurityReport, RepellerReport, ABSORB_STEPS, ANCHOR_COUNT, DEFAULT_EPS_LIST,
    DEFAULT_N_TEST,
};
pub use graph::{
    build_transition_graph, build_transition_graph_with, chain_recurrent_cells, TransitionGraph,
    DEFAULT_BLOAT, DEFAULT_SAMPLES_PER_CELL,
};
pub use grid::{BoxGrid, CellSet};
pub use periodic::{
    periodic_points, periodic_points_with_cap, PeriodicPointSet, DEFAULT_POINT_CAP,
    MAX_SEARCH_PERIOD,
};
pub use smoothness::{attractor_smoothness, julia_polar_smoothness, SmoothnessReport};
