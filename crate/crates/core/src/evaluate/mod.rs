//! Accuracy metrics, demographic slices, significance tests, experiment
//! grids and timing.

mod adjacency;
mod experiment;
pub mod export;
mod metrics;
mod stats;
mod timing;

pub use adjacency::AdjacencyGraph;
pub use experiment::{
    cross_media_matrix, fit_grid, run_experiment, select_and_score, CrossMediaRow, ExperimentGrid,
    ExperimentResult, FeatureContext, FittedCell, GridCell, MediaCorpora,
};
pub use metrics::{
    accuracy, align, near_miss_accuracy, slice_accuracy, ConfusionCell, EvalReport, ReportConfig, SliceField,
    SliceReport, SliceRow, StateScore, DEFAULT_MIN_SUPPORT,
};
pub use stats::{average_ranks, proportion_test, spearman, spearman_keyed, Correlation, ProportionTest};
pub use timing::{benchmark, median, TimingReport, TimingRow, MIN_REPETITIONS};
