//! Straightforward single-threaded scalar implementation of the pixel
//! metrics: a per-pixel counting loop and comparison-sort AUC. It serves as
//! the baseline the packed kernels are benchmarked and cross-checked against.

use std::cmp::Ordering;

use super::pixel::PixelMetricSet;
use crate::confusion::ConfusionCounts;
use crate::error::{Error, Result};

/// Per-pixel counts; `valid = None` means every pixel counts.
pub fn confusion_scalar(scores: &[f32], gt: &[bool], valid: Option<&[bool]>, threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for i in 0..gt.len() {
        if let Some(v) = valid {
            if !v[i] {
                continue;
            }
        }
        let pred = scores[i] as f64 >= threshold;
        match (pred, gt[i]) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// Sorts `(score, label)` pairs descending and integrates the ROC step by step.
pub fn auc_scalar(scores: &[f32], gt: &[bool], valid: Option<&[bool]>) -> Result<f64> {
    let mut pairs: Vec<(f32, bool)> = (0..gt.len())
        .filter(|&i| valid.is_none_or(|v| v[i]))
        .map(|i| (scores[i], gt[i]))
        .collect();
    let p = pairs.iter().filter(|x| x.1).count() as f64;
    let n = pairs.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return Err(Error::UndefinedAuc);
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let (mut tp, mut fp, mut area) = (0.0f64, 0.0f64, 0.0f64);
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < pairs.len() && pairs[i].0 == t {
            if pairs[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        area += (fp - fp0) / n * (tp + tp0) / p / 2.0;
    }
    Ok(area)
}

/// All pixel metrics for one image, scalar path.
pub fn evaluate_scalar(scores: &[f32], gt: &[bool], valid: Option<&[bool]>, threshold: f64) -> Result<PixelMetricSet> {
    let counts = confusion_scalar(scores, gt, valid, threshold);
    let auc = match auc_scalar(scores, gt, valid) {
        Ok(a) => Some(a),
        Err(Error::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    PixelMetricSet::from_counts(&counts, auc)
}
