//! Sliding-window detection and agglomerative segmentation over continuous video.

mod segment;
mod windows;

pub use segment::{
    cosine, filter_background, load_segments, pool_segments, save_segments, segment_agglomerative, segment_features, segments_jsonl,
    train_background, uniform_intervals, BackgroundModel, Rescore, Segment,
};
pub use windows::{
    default_schedule, detections_csv, load_detections, nms, save_detections, score_windows, window_schedule, Detection,
    IntegralHistogram, Overlap, WindowLevel,
};
