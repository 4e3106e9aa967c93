//! Parametric runtime-distribution estimation.

pub mod classes;
pub mod family;
pub mod fit;
pub mod ks;
pub mod mixture;
pub mod optimize;
pub mod quadrature;
pub mod special;

use thiserror::Error;

pub use classes::{config_histograms, fit_cluster, ClusterFits, ConfigHistograms, Histogram, LabelFits};
pub use family::{cdf, pdf, Family, Model};
pub use fit::{
    fit_mle, fit_mle_with, rank_fits, select_best, select_best_with, DistributionFit, FitConfig, MIN_FIT_SAMPLES,
};
pub use ks::ks_statistic;
pub use mixture::{overall_mixture, MixtureModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid {family} parameters: {reason}")]
    InvalidParams { family: Family, reason: String },
    #[error("unknown distribution family {0:?}")]
    UnknownFamily(String),
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("sample is degenerate (all values equal)")]
    DegenerateSample,
    #[error("sample contains non-finite values")]
    NonFiniteSample,
    #[error("no starting point of {0} has finite likelihood")]
    NoFeasibleStart(Family),
    #[error("{family} fit did not converge within {iterations} iterations")]
    NoConvergence { family: Family, iterations: usize },
    #[error("every candidate fit failed")]
    AllFitsFailed,
    #[error("mixture weights do not match fits: {0}")]
    WeightMismatch(String),
}
