//! Pixel-level and image-level evaluation.

pub mod image;
pub mod pixel;
pub mod reference;
pub mod roc;

pub use image::{evaluate_image, load_scores, DetectionRecord, ImageMetrics, ImageReport};
pub use pixel::{
    accuracy, aggregate, auc_pixel, evaluate_batch, evaluate_pixel, evaluate_sample, f1_binary, f1_invert, f1_macro,
    f1_micro, f1_negative_class, f1_permute, f1_weighted, iou, AggregateMode, Metric, PixelAggregate, PixelMetricSet,
    PixelOptions, PixelReport, PixelSample, SampleOutcome, SampleReport, SizePolicy,
};
pub use roc::{roc_points, RocPoint};
