//! Radiomic feature extraction and outcome modeling for 3D PET/CT volumes.
//!
//! The crate covers the full desk-scale pipeline: volume/mask I/O and
//! resampling, gray-level quantization, intensity/shape/texture feature
//! extraction over a parameter grid, statistical and survival primitives,
//! imbalance-adjusted ensemble logistic regression with bootstrap feature
//! selection, and imbalance-adjusted random forests with risk stratification.

pub mod error;
pub mod extract;
pub mod forest;
pub mod hull;
pub mod intensity;
pub mod linalg;
pub mod logistic;
pub mod quantize;
pub mod rng;
pub mod selection;
pub mod shape;
pub mod stats;
pub mod survival;
pub mod texture;
pub mod volume;

pub use error::{Error, Result};
