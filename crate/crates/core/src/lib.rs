//! Pixelwise image saliency.
//!
//! The detector builds a shape-adaptive support region around every pixel, describes
//! each pixel by a color histogram over that region and an orientation/magnitude
//! histogram over a square window, scores the global rarity of both descriptors after
//! clustering, weights the scores by center and border priors, and finally assigns a
//! discrete saliency level per pixel by filtering a quadratic cost volume over the same
//! support regions. A subsampled variant runs the labeling on one pixel per 3x3 tile
//! and propagates the result back to full resolution.
//!
//! The [`eval`] module carries the benchmark protocol (PR curves, adaptive-threshold
//! F-measure, MAE and average precision).

pub mod config;
pub mod cross;
pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod prior;
pub mod solver;

pub use config::{Normalization, RunConfig, Variant};
pub use error::{PisaError, Result};
pub use imaging::{RasterImage, RgbImage};
pub use solver::{detect, run_fpisa, run_pisa, Detection, LevelMap, SaliencyMap};
