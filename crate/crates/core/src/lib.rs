//! Attribute-based recognition of composite activities.
//!
//! The crate covers the whole pipeline: mining composite/attribute weights
//! from script corpora ([`corpus`]), pose-trajectory features and codebooks
//! ([`posefeat`]), attribute classifiers with context and co-occurrence
//! stacking ([`attributes`]), composite classification including zero-shot
//! transfer and label propagation ([`composites`]), sliding-window detection
//! and segmentation ([`temporal`]), pictorial-structures inference
//! ([`psinfer`]) and synthetic data, metrics and experiment orchestration
//! ([`harness`]).

pub mod attributes;
pub mod composites;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod linear;
pub mod posefeat;
pub mod psinfer;
pub mod temporal;
pub mod util;

pub use error::{Error, Result};
