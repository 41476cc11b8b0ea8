//! Leaf recognition from handcrafted and learned features.
//!
//! Each leaf image is segmented and aligned, then described by seven
//! feature groups: the color image, a morphological vein map, an
//! xy-projection histogram, shape measurements and moments, Haralick
//! texture, color-space moments and Fourier descriptors. One encoder per
//! group maps its input to a 100-d embedding; the concatenated 700-d vector
//! is standardized and classified by a one-vs-one RBF SVM. [`pipeline`]
//! wires this into 10-fold cross-validation and [`cli`] exposes it as the
//! `leafkit` binary.

pub mod cli;
pub mod color;
pub mod container;
pub mod error;
pub mod geometry;
pub mod neural;
pub mod pipeline;
pub mod raster;
pub mod scaler;
pub mod signature;
pub mod svm;
pub mod texture;
pub mod vein;

pub use error::{Error, Result};
