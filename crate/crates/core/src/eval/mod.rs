//! Benchmark protocol: dataset pairing, PR curves, adaptive-threshold F-measure, MAE,
//! average precision and report files.

mod dataset;
mod metrics;
mod report;

pub use dataset::{load_dataset, DatasetEntry, DatasetLayout};
pub use metrics::{
    adaptive_threshold, average_precision, binarize_mask, f_measure, mae, max_min_normalize, mean_abs_difference,
    mean_curve, pr_curve, precision_recall_at, PrPoint, BETA_SQ, THRESHOLDS,
};
pub use report::{evaluate_dataset, evaluate_map, Aggregate, EvalReport, ImageRecord};
