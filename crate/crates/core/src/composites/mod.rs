//! Composite activity classification from sequence-level attribute scores.

mod classify;
mod pst;

pub use classify::{
    classify_nn, classify_svm, nn_script_classify, script_score, seq_feature, train_composite_svm, weighted_l2, LabeledSequence,
    NnPrediction, SequenceFeature,
};
pub use pst::{
    build_knn_graph, predictions_csv, propagate, pst_init, save_predictions, CompositePrediction, EdgeKernel, LabelSet,
    NeighborGraph, Propagation, PstConfig, SigmaMode,
};
