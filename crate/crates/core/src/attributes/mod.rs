//! Attribute score matrices, context and co-occurrence features and stacked refinement.

mod scores;
mod stacking;

pub use scores::{label_fingerprint, score_intervals, ScoreMatrix};
pub use stacking::{
    context_feature, cooccurrence_feature, train_and_score_stacked, train_stacked, StackMode, StackSequence,
    StackedModels, DEFAULT_FLOOR,
};
