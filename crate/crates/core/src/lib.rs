//! Nucleus segmentation toolkit: tiling, annotation rasterization, dataset
//! splits, training schedules, a baseline pixel classifier, post-processing
//! and overlap evaluation.

pub mod annotations;
pub mod baseline;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod io;
pub mod pipeline;
pub mod schedules;
pub mod tiler;

pub use error::{Error, Result};
