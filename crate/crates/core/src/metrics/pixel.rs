//! Pixel-level (localization) metrics: the F1 family, IoU, accuracy and AUC,
//! per image and aggregated over a dataset.
//!
//! Two different "inverted" F1 scores appear in the literature and both are
//! exposed here:
//!
//! * [`f1_invert`] scores the *complemented prediction* against the original
//!   ground truth, `F1(G, P^C)`. Permute-F1 takes the max of this and F1.
//! * [`f1_negative_class`] is the F1 of the negative class, `2TN/(2TN+FN+FP)`,
//!   i.e. both planes complemented. The multi-class averages (macro, weighted)
//!   combine F1 with this one.
//!
//! Zero denominators (both sets empty) score 1.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roc::{auc_labeled, f32_key, LabeledKeys};
use crate::confusion::{confusion, ConfusionCounts};
use crate::corpus::{
    apply_shape_transform, decode_mask, decode_scoremap, BinaryMask, Manifest, ScoreMap, ShapeMask, ShapePolicy,
    RAW_SCORE_EXTENSION,
};
use crate::error::{Error, Result};
use crate::parallel::Workers;

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// `2TP / (2TP + FP + FN)`.
pub fn f1_binary(c: &ConfusionCounts) -> f64 {
    ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_)
}

/// F1 of the complemented prediction against the ground truth.
pub fn f1_invert(c: &ConfusionCounts) -> f64 {
    f1_binary(&c.complement_pred())
}

/// F1 of the negative class: `2TN / (2TN + FN + FP)`.
pub fn f1_negative_class(c: &ConfusionCounts) -> f64 {
    f1_binary(&c.swap_classes())
}

/// `max(F1(G, P), F1(G, P^C))`.
pub fn f1_permute(c: &ConfusionCounts) -> f64 {
    f1_binary(c).max(f1_invert(c))
}

/// Two-class micro average; identical to accuracy.
pub fn f1_micro(c: &ConfusionCounts) -> f64 {
    ratio(c.tp + c.tn, c.total())
}

/// Unweighted mean of the positive- and negative-class F1.
pub fn f1_macro(c: &ConfusionCounts) -> f64 {
    (f1_binary(c) + f1_negative_class(c)) / 2.0
}

/// Support-weighted mean of the positive- and negative-class F1.
pub fn f1_weighted(c: &ConfusionCounts) -> f64 {
    let total = c.total();
    if total == 0 {
        return 1.0;
    }
    (c.positives() as f64 * f1_binary(c) + c.negatives() as f64 * f1_negative_class(c)) / total as f64
}

/// `TP / (TP + FP + FN)`.
pub fn iou(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp + c.fn_)
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    Ok(ratio(c.tp + c.tn, c.total()))
}

/// Trapezoid AUC of a score map against the ground truth over valid pixels.
pub fn auc_pixel(score: &ScoreMap, gt: &BinaryMask, shape: Option<&ShapeMask>) -> Result<f64> {
    if score.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: score.dims(),
        });
    }
    if let Some(s) = shape {
        if s.dims() != gt.dims() {
            return Err(Error::DimensionMismatch {
                expected: gt.dims(),
                found: s.dims(),
            });
        }
    }
    auc_labeled(&PixelKeys { score, gt, shape })
}

struct PixelKeys<'a> {
    score: &'a ScoreMap,
    gt: &'a BinaryMask,
    shape: Option<&'a ShapeMask>,
}

impl LabeledKeys for PixelKeys<'_> {
    fn for_each_key(&self, mut f: impl FnMut(u32)) {
        let data = self.score.data();
        for (w, chunk) in data.chunks(64).enumerate() {
            let g = self.gt.words()[w];
            let m = self.shape.map_or(u64::MAX, |s| s.words()[w]);
            if m == u64::MAX {
                for (j, &v) in chunk.iter().enumerate() {
                    f(f32_key(v) | (((g >> j) as u32 & 1) << 31));
                }
            } else if m != 0 {
                for (j, &v) in chunk.iter().enumerate() {
                    if (m >> j) & 1 == 1 {
                        f(f32_key(v) | (((g >> j) as u32 & 1) << 31));
                    }
                }
            }
        }
    }
}

/// Every pixel-level number reported for one image (or one aggregate).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelMetricSet {
    pub f1: f64,
    pub invert_f1: f64,
    pub permute_f1: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub weighted_f1: f64,
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub iou: f64,
}

impl PixelMetricSet {
    pub fn from_counts(c: &ConfusionCounts, auc: Option<f64>) -> Result<Self> {
        Ok(Self {
            f1: f1_binary(c),
            invert_f1: f1_invert(c),
            permute_f1: f1_permute(c),
            macro_f1: f1_macro(c),
            micro_f1: f1_micro(c),
            weighted_f1: f1_weighted(c),
            auc,
            accuracy: accuracy(c)?,
            iou: iou(c),
        })
    }

    /// Value of a named metric.
    pub fn get(&self, metric: Metric) -> Option<f64> {
        Some(match metric {
            Metric::F1 => self.f1,
            Metric::InvertF1 => self.invert_f1,
            Metric::PermuteF1 => self.permute_f1,
            Metric::MacroF1 => self.macro_f1,
            Metric::MicroF1 => self.micro_f1,
            Metric::WeightedF1 => self.weighted_f1,
            Metric::Auc => return self.auc,
            Metric::Accuracy => self.accuracy,
            Metric::Iou => self.iou,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    InvertF1,
    PermuteF1,
    MacroF1,
    MicroF1,
    WeightedF1,
    Auc,
    Accuracy,
    Iou,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::F1,
        Metric::InvertF1,
        Metric::PermuteF1,
        Metric::MacroF1,
        Metric::MicroF1,
        Metric::WeightedF1,
        Metric::Auc,
        Metric::Accuracy,
        Metric::Iou,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::InvertF1 => "invert_f1",
            Metric::PermuteF1 => "permute_f1",
            Metric::MacroF1 => "macro_f1",
            Metric::MicroF1 => "micro_f1",
            Metric::WeightedF1 => "weighted_f1",
            Metric::Auc => "auc",
            Metric::Accuracy => "accuracy",
            Metric::Iou => "iou",
        }
    }

    /// Accepts the snake_case name, a kebab-case spelling, or the short
    /// variant names `invert`, `permute`, `macro`, `micro`, `weighted`.
    pub fn parse(s: &str) -> Option<Metric> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL.into_iter().find(|m| {
            let name = m.name();
            name == s || name.strip_suffix("_f1") == Some(s.as_str())
        })
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One in-memory image to evaluate.
#[derive(Clone, Debug)]
pub struct PixelSample {
    pub score: ScoreMap,
    pub gt: BinaryMask,
    pub shape: Option<ShapeMask>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub counts: ConfusionCounts,
    pub metrics: PixelMetricSet,
}

/// Binarizes at `threshold`, counts, and scores one image. AUC is `None` when
/// the valid region of the ground truth holds a single class.
pub fn evaluate_sample(sample: &PixelSample, threshold: f64) -> Result<SampleOutcome> {
    let pred = sample.score.binarize(threshold);
    let counts = confusion(&pred, &sample.gt, sample.shape.as_ref())?;
    let auc = match auc_pixel(&sample.score, &sample.gt, sample.shape.as_ref()) {
        Ok(a) => Some(a),
        Err(Error::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(SampleOutcome {
        counts,
        metrics: PixelMetricSet::from_counts(&counts, auc)?,
    })
}

/// Parallel [`evaluate_sample`]; output order follows input order.
pub fn evaluate_batch(samples: &[PixelSample], threshold: f64, workers: Workers) -> Result<Vec<SampleOutcome>> {
    let results: Vec<Result<SampleOutcome>> =
        workers.install(|| samples.par_iter().map(|s| evaluate_sample(s, threshold)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Batch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Unweighted mean of per-image values.
    #[default]
    Mean,
    /// Pool confusion counts over the dataset, then apply the formulas. AUC
    /// stays a per-image mean.
    Global,
}

/// How a prediction whose size differs from its ground truth is reconciled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizePolicy {
    /// Sizes must match exactly.
    #[default]
    Strict,
    /// Zero-pad the ground truth to the prediction size and evaluate only the
    /// original region (predictions made on padded inputs).
    PadGt,
    /// Bilinearly resize the prediction to the ground-truth size.
    ResizePred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PixelOptions {
    /// Prediction binarization threshold (`score >= threshold` is manipulated).
    pub threshold: f64,
    /// Threshold used to binarize ground-truth mask images.
    pub mask_threshold: f64,
    pub aggregate: AggregateMode,
    pub size_policy: SizePolicy,
    pub invert_gt: bool,
    pub invert_pred: bool,
    /// Extra metrics shown next to F1 in summaries.
    pub variants: Vec<Metric>,
}

impl Default for PixelOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            mask_threshold: 0.5,
            aggregate: AggregateMode::Mean,
            size_policy: SizePolicy::Strict,
            invert_gt: false,
            invert_pred: false,
            variants: Vec::new(),
        }
    }
}

impl PixelOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("threshold", self.threshold), ("mask_threshold", self.mask_threshold)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub id: String,
    #[serde(flatten)]
    pub metrics: PixelMetricSet,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelAggregate {
    #[serde(flatten)]
    pub metrics: PixelMetricSet,
    /// Images contributing to the count-based metrics.
    pub samples: usize,
    /// Images contributing to the AUC mean.
    pub auc_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelReport {
    pub dataset: String,
    pub per_sample: Vec<SampleReport>,
    pub aggregate: PixelAggregate,
    pub skipped_auc: Vec<String>,
    /// Authentic images are not part of pixel-level evaluation.
    pub skipped_authentic: usize,
    pub options: PixelOptions,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Reduces per-image results in the given order.
pub fn aggregate(outcomes: &[SampleOutcome], mode: AggregateMode) -> Result<PixelAggregate> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("no samples to aggregate".into()));
    }
    let auc = mean(outcomes.iter().filter_map(|o| o.metrics.auc));
    let auc_samples = outcomes.iter().filter(|o| o.metrics.auc.is_some()).count();
    let metrics = match mode {
        AggregateMode::Mean => {
            let m = |f: fn(&PixelMetricSet) -> f64| mean(outcomes.iter().map(|o| f(&o.metrics))).unwrap_or(0.0);
            PixelMetricSet {
                f1: m(|s| s.f1),
                invert_f1: m(|s| s.invert_f1),
                permute_f1: m(|s| s.permute_f1),
                macro_f1: m(|s| s.macro_f1),
                micro_f1: m(|s| s.micro_f1),
                weighted_f1: m(|s| s.weighted_f1),
                auc,
                accuracy: m(|s| s.accuracy),
                iou: m(|s| s.iou),
            }
        }
        AggregateMode::Global => {
            let total: ConfusionCounts = outcomes.iter().map(|o| o.counts).sum();
            PixelMetricSet::from_counts(&total, auc)?
        }
    };
    Ok(PixelAggregate {
        metrics,
        samples: outcomes.len(),
        auc_samples,
    })
}

/// Finds `<id>.png`, `<id>.f32`, `<id>.jpg` or `<id>.jpeg` in a prediction directory.
pub fn find_prediction(pred_dir: &Path, id: &str) -> Option<PathBuf> {
    ["png", RAW_SCORE_EXTENSION, "jpg", "jpeg"]
        .iter()
        .map(|ext| pred_dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

fn load_sample(manifest: &Manifest, idx: usize, pred_path: &Path, opts: &PixelOptions) -> Result<PixelSample> {
    let record = &manifest.samples[idx];
    let mask_rel = record.mask_path.as_ref().expect("manipulated samples carry masks");
    let mut gt = decode_mask(&manifest.resolve(mask_rel), opts.mask_threshold)?;
    if opts.invert_gt {
        gt = gt.complement();
    }
    let mut score = decode_scoremap(pred_path)?;
    if opts.invert_pred {
        score = score.invert();
    }
    if score.dims() == gt.dims() {
        return Ok(PixelSample { score, gt, shape: None });
    }
    let (gw, gh) = gt.dims();
    let (pw, ph) = score.dims();
    match opts.size_policy {
        SizePolicy::Strict => Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: score.dims(),
        }),
        SizePolicy::PadGt => {
            let (gt, shape) = apply_shape_transform(&gt, ShapePolicy::PadTo { width: pw, height: ph })?;
            Ok(PixelSample {
                score,
                gt,
                shape: Some(shape),
            })
        }
        SizePolicy::ResizePred => {
            let (score, _) = apply_shape_transform(&score, ShapePolicy::Resize { width: gw, height: gh })?;
            Ok(PixelSample { score, gt, shape: None })
        }
    }
}

/// Evaluates every manipulated sample of `manifest` against the predictions in
/// `pred_dir`. Samples are processed in parallel and reduced in manifest order.
pub fn evaluate_pixel(
    manifest: &Manifest,
    pred_dir: &Path,
    opts: &PixelOptions,
    workers: Workers,
) -> Result<PixelReport> {
    opts.validate()?;
    let targets: Vec<usize> = (0..manifest.len())
        .filter(|&i| manifest.samples[i].label.is_manipulated())
        .collect();
    if targets.is_empty() {
        return Err(Error::InvalidArgument("manifest has no manipulated samples".into()));
    }
    let mut missing = Vec::new();
    let mut preds = Vec::with_capacity(targets.len());
    for &i in &targets {
        let id = &manifest.samples[i].id;
        match find_prediction(pred_dir, id) {
            Some(p) => preds.push(p),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }

    let results: Vec<Result<SampleOutcome>> = workers.install(|| {
        targets
            .par_iter()
            .zip(preds.par_iter())
            .map(|(&i, pred)| {
                let sample = load_sample(manifest, i, pred, opts)?;
                evaluate_sample(&sample, opts.threshold)
            })
            .collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    for (r, &i) in results.into_iter().zip(&targets) {
        outcomes.push(r.map_err(|e| e.in_sample(&manifest.samples[i].id))?);
    }

    let per_sample: Vec<SampleReport> = outcomes
        .iter()
        .zip(&targets)
        .map(|(o, &i)| SampleReport {
            id: manifest.samples[i].id.clone(),
            metrics: o.metrics,
            counts: o.counts,
        })
        .collect();
    let skipped_auc = per_sample
        .iter()
        .filter(|s| s.metrics.auc.is_none())
        .map(|s| s.id.clone())
        .collect();
    Ok(PixelReport {
        dataset: manifest.dataset_name.clone(),
        aggregate: aggregate(&outcomes, opts.aggregate)?,
        per_sample,
        skipped_auc,
        skipped_authentic: manifest.len() - targets.len(),
        options: opts.clone(),
    })
}

const CSV_METRICS: [Metric; 9] = Metric::ALL;

impl PixelReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per sample: id, every metric, then the four counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for m in CSV_METRICS {
            out.push(',');
            out.push_str(m.name());
        }
        out.push_str(",tp,tn,fp,fn\n");
        for s in &self.per_sample {
            out.push_str(&csv_field(&s.id));
            for m in CSV_METRICS {
                out.push(',');
                if let Some(v) = s.metrics.get(m) {
                    out.push_str(&v.to_string());
                }
            }
            let c = s.counts;
            out.push_str(&format!(",{},{},{},{}\n", c.tp, c.tn, c.fp, c.fn_));
        }
        out
    }

    /// Aggregate table with F1, AUC, accuracy, IoU plus the requested variants.
    pub fn summary_table(&self) -> String {
        let mut columns = vec![Metric::F1];
        for &v in &self.options.variants {
            if !columns.contains(&v) {
                columns.push(v);
            }
        }
        for m in [Metric::Auc, Metric::Accuracy, Metric::Iou] {
            if !columns.contains(&m) {
                columns.push(m);
            }
        }
        let header: Vec<String> = columns.iter().map(|m| format!("{:>11}", m.name())).collect();
        let row: Vec<String> = columns
            .iter()
            .map(|&m| match self.aggregate.metrics.get(m) {
                Some(v) => format!("{v:>11.4}"),
                None => format!("{:>11}", "n/a"),
            })
            .collect();
        format!(
            "{:<16}{:>8}{}\n{:<16}{:>8}{}\n",
            "dataset",
            "images",
            header.join(""),
            truncate(&self.dataset, 15),
            self.aggregate.samples,
            row.join("")
        )
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
