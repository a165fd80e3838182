//! Self-supervised image harmonization toolkit.
//!
//! Unlabeled photos are turned into pseudo training triplets by cropping two
//! overlapping regions and re-grading both under two random 3D LUTs. A small
//! harmonizer learns to re-grade one crop so it matches the appearance of the
//! other, and the inference pipeline uses it to blend a foreground into a
//! background through a soft mask.

pub mod augment;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod harmonizer;
pub mod image;
pub mod lut;
pub mod metrics;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
