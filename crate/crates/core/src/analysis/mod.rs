//! Posterior summaries and goodness-of-fit statistics.

mod gof;
mod mode;
mod stats;

pub use gof::{
    gof_evaluate, gof_summary, percentile_sequence, variance_decomposition, Component,
    ComponentSamples, ComponentSummary, GofOptions, GofRecord, GofSummary, PercentileEntry,
    VarianceDecomposition,
};
pub use mode::{mode_estimate, ModeEstimate};
pub use stats::{
    bootstrap_ci, correlation, covariance, marginal_mode, mean, prediction_interval, quantile, quantile_sorted,
    variance, BootstrapBands,
};
