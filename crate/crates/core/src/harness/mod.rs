//! Synthetic data with planted ground truth, evaluation metrics and experiment orchestration.

mod experiment;
mod metrics;
mod synthetic;

pub use experiment::*;
pub use metrics::*;
pub use synthetic::*;
