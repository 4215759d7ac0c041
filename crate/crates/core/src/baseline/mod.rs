//! Per-pixel logistic segmenter over local color/texture features.
//!
//! Small enough to train on a desk, but it produces the same probability
//! maps an external deep model would, so every downstream stage can run on
//! its output unchanged.

mod features;
mod model;
mod train;

pub use features::{extract_features, extract_features_with, FeatureMap, FEATURES};
pub use model::{
    loss_and_grad, loss_and_grad_batch, predict, sigmoid, BaselineWeights, Gradient, PROB_CLAMP,
    WEIGHTS_FORMAT_VERSION,
};
pub use train::{
    load_samples, lr_range_test, steps_per_epoch, train, train_with_schedule, RangeTest, Sample, StageReport, TrainOptions,
    TrainOutcome,
};

use crate::imaging::{ProbMap, RasterImage};

/// Features and prediction in one call.
pub fn predict_image(weights: &BaselineWeights, img: &RasterImage) -> ProbMap {
    predict(weights, &extract_features(img))
}
