//! Tree-structured pictorial-structures inference over discrete position grids.

mod grid;
mod hand;
mod infer;
mod model;
mod pcp;

pub use grid::{grids_from_binary, grids_to_binary, load_grids, save_grids, Grid, LikelihoodGrids};
pub use hand::{hand_likelihood_map, HandHypothesis, HandHypothesisSet, DEFAULT_OFFSET, DEFAULT_PRECISION};
pub use infer::{
    infer_map, infer_marginals, joint_log_score, load_placements, lower_envelope, max_message, save_placements, Algorithm, MapResult, LOG_FLOOR,
};
pub use model::{PairwiseGaussian, PartGraph};
pub use pcp::{default_sticks, pcp_eval, PcpReport, Stick, StickScore};
