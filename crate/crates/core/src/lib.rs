//! Evaluation and dataset-hygiene engine for image manipulation detection
//! and localization.
//!
//! * [`corpus`]: manifests, mask/score decoding, shape transforms
//! * [`confusion`]: packed confusion counting
//! * [`metrics`]: pixel-level and image-level metrics
//! * [`robustness`]: blur / noise / JPEG perturbations and curves
//! * [`cleanse`]: SSIM near-duplicate grouping
//! * [`synth`]: naive copy-move and inpainting tamper synthesis

pub mod cleanse;
pub mod confusion;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod parallel;
pub mod robustness;
pub mod seed;
pub mod synth;

pub use confusion::{confusion, confusion_batch, ConfusionCounts};
pub use error::{Error, Result};
pub use parallel::Workers;
