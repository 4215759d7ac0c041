//! Mask clean-up, overlap metrics, reports and overlay renderings.

mod metrics;
mod overlay;
mod postprocess;
mod report;

pub use metrics::{dice, iou, overlap_counts, OverlapCounts};
pub use overlay::{overlay_edges, overlay_iou, BLUE, GREEN};
pub use postprocess::{postprocess, ElementSpec, PostprocessConfig, Postprocessor};
pub use report::{evaluate, evaluate_ids, prediction_path, MetricsReport, MetricsRow, CSV_HEADER};
