// Validation guards use `!(x > 0.0)` so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Directed-graph PageRank analytics.
//!
//! The crate computes exact PageRank (power iteration plus a dense oracle),
//! pools nodes into (k_in, k_out) degree classes and solves the class-level
//! mean-field recurrence for averages and within-class fluctuations, fits
//! the resulting distributions, and turns the uncorrelated closed form into
//! a practical rank predictor: expected position in an n-result list from
//! in-degree alone, and its inverse, the in-links required to reach a target
//! position. A seeded configuration-model generator provides uncorrelated
//! ground truth at bench scale.
//!
//! ```
//! use rankfield::{ConvergenceSpec, DirectedGraph, IngestOptions, RankModel};
//!
//! // Exact PageRank of a 3-cycle is uniform.
//! let g = DirectedGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], IngestOptions::default())?;
//! let pr = rankfield::power_iteration(&g, 0.15, &ConvergenceSpec::default())?;
//! assert!((pr.values[0] - 1.0 / 3.0).abs() < 1e-9);
//!
//! // How many in-links does a page need to land in the top ten of a
//! // million-hit result list?
//! let model = RankModel::default();
//! let k = model.required_inlinks(10.0, 1_000_000)?;
//! assert!(model.predict_local_rank(k, 1_000_000) <= 10.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analytics;
pub mod graph;
pub mod meanfield;
pub mod pagerank;
pub mod rank;
pub mod report;
pub mod synth;

pub use analytics::{
    default_x_min, fit_power_law, fit_power_law_discrete, fit_power_law_scan, linear_fit,
    log_binned_mean, pearson, per_class_distribution, zipf_curve, AnalyticsError,
    LogBinnedSeries, PowerLawFit,
};
pub use graph::{
    read_edge_list, read_edge_list_path, DegreeClass, DegreeClassTable, DirectedGraph,
    GraphError, IngestOptions, NodeId, NodeMapping,
};
pub use meanfield::{
    aggregate_by_class, marginal_over_out_degree, solve_class_means, solve_class_variances,
    CovForm, MeanFieldError, MeanFieldSolution, UncorrelatedModel, VarianceForm,
};
pub use pagerank::{
    exact_solve, power_iteration, power_iteration_threaded, residual, ConvergenceSpec,
    PageRankVector, SolveError,
};
pub use rank::{
    calibrate_amplitude, Calibration, RankModel, RankModelError, RankObservation,
    RESULT_LIST_CAP,
};
pub use report::{evaluate_pipeline, Metric, PipelineMetrics};
pub use synth::{
    generate, sample_degree_sequence, web_like_spec, DegreeLaw, GeneratedGraph,
    GeneratorSpec, MultiEdgePolicy, OutDegreeLaw, SelfLoopPolicy, SynthError,
};
