//! Pose-trajectory descriptors, per-sub-feature codebooks and bag-of-words encoding.

mod bow;
mod codebook;
mod features;
mod tracks;

pub use bow::{
    build_codebooks, describe_frames, encode_bow, frame_counts, normalize_blocks, BowHistogram, CodebookBundle,
    FrameDescriptors,
};
pub use codebook::{build_codebook, Codebook, KMEANS_MAX_ITERS, KMEANS_REL_TOL};
pub use features::{
    acceleration_histogram, angle_triples, bm_feature, direction_bin, distance_pairs, fft_feature, interior_angle,
    rate_histogram, spectral_summary, statistics, velocity_histogram, PoseFeatureKind, SpectralSummary, SubFeature,
    TRAJECTORY_LENGTHS,
};
pub use tracks::{BodyPart, JointTrackSet, Point};
