//! Detection metrics, a dihedral baseline, residual semivariograms and
//! dataset analytics.

mod analytics;
mod pr;
mod variogram;

use thiserror::Error;

pub use crate::annot::{coverage_stats, CoverageReport};
pub use analytics::{dataset_analytics, AnalyticsReport, LogHistogram, ModelStats, AGGREGATE_NAME, BINS_PER_DECADE, LOG_MAX, LOG_MIN};
pub use pr::{dihedral_baseline, pr_metrics, pr_metrics_with, DetectionResult, Pr, PrMode, PrReport, PrRow, PrTable};
pub use variogram::{residual_field, semivariogram, SemivariogramConfig, SemivariogramReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("need at least two distinct points, got {0}")]
    InsufficientPoints(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("mesh carries no labels")]
    MissingLabels,
    #[error("invalid configuration: {0}")]
    Config(String),
}
