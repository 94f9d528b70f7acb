//! Image-level (detection) metrics over one scalar score per image.
//!
//! Scores are gathered for the whole dataset first and the metrics computed
//! once over the gathered list.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pixel::{accuracy, f1_binary};
use super::roc::auc_scores;
use crate::confusion::ConfusionCounts;
use crate::corpus::{Label, Manifest};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub f1: f64,
    /// Absent when every record carries the same label.
    pub auc: Option<f64>,
    pub accuracy: f64,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

/// Image counts at `threshold`; a score `>= threshold` predicts manipulated.
pub fn detection_counts(records: &[DetectionRecord], threshold: f64) -> ConfusionCounts {
    records.iter().fold(ConfusionCounts::default(), |mut c, r| {
        match (r.score >= threshold, r.label.is_manipulated()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
        c
    })
}

pub fn evaluate_image(records: &[DetectionRecord], threshold: f64) -> Result<ImageMetrics> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no detection records".into()));
    }
    if let Some(r) = records.iter().find(|r| !(0.0..=1.0).contains(&r.score)) {
        return Err(Error::InvalidArgument(format!(
            "score {} of {:?} is outside [0, 1]",
            r.score, r.id
        )));
    }
    let counts = detection_counts(records, threshold);
    let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    let labels: Vec<bool> = records.iter().map(|r| r.label.is_manipulated()).collect();
    let auc = match auc_scores(&scores, &labels) {
        Ok(a) => Some(a),
        Err(Error::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(ImageMetrics {
        f1: f1_binary(&counts),
        auc,
        accuracy: accuracy(&counts)?,
        counts,
    })
}

/// Reads an `id,score` CSV and joins it with manifest labels in manifest order.
/// Every manifest id must appear exactly once.
pub fn load_scores(path: &Path, manifest: &Manifest) -> Result<Vec<DetectionRecord>> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(score_col)) = (col("id"), col("score")) else {
        return Err(csv_err("header must contain `id` and `score` columns".into()));
    };

    let known: HashMap<&str, Label> = manifest.samples.iter().map(|s| (s.id.as_str(), s.label)).collect();
    let mut scores: HashMap<String, f64> = HashMap::new();
    let mut problems = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        let line = line + 2;
        let (Some(id), Some(raw)) = (row.get(id_col), row.get(score_col)) else {
            problems.push(format!("line {line}: missing column"));
            continue;
        };
        let score = match raw.parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => v,
            Ok(v) => {
                problems.push(format!("line {line}: score {v} for {id:?} is outside [0, 1]"));
                continue;
            }
            Err(_) => {
                problems.push(format!("line {line}: unparsable score {raw:?} for {id:?}"));
                continue;
            }
        };
        if !known.contains_key(id) {
            problems.push(format!("line {line}: id {id:?} is not in the manifest"));
        } else if scores.insert(id.to_string(), score).is_some() {
            problems.push(format!("line {line}: duplicate id {id:?}"));
        }
    }
    for s in &manifest.samples {
        if !scores.contains_key(&s.id) && !problems.iter().any(|p| p.contains(&format!("{:?}", s.id))) {
            problems.push(format!("missing score for id {:?}", s.id));
        }
    }
    if !problems.is_empty() {
        return Err(csv_err(problems.join("; ")));
    }
    Ok(manifest
        .samples
        .iter()
        .map(|s| DetectionRecord {
            id: s.id.clone(),
            score: scores[&s.id],
            label: s.label,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub dataset: String,
    pub records: usize,
    pub metrics: ImageMetrics,
    pub threshold: f64,
}

impl ImageReport {
    pub fn new(dataset: &str, records: &[DetectionRecord], threshold: f64) -> Result<Self> {
        Ok(Self {
            dataset: dataset.to_string(),
            records: records.len(),
            metrics: evaluate_image(records, threshold)?,
            threshold,
        })
    }

    pub fn to_csv(&self) -> String {
        let m = &self.metrics;
        let auc = m.auc.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "dataset,records,threshold,f1,auc,accuracy,tp,tn,fp,fn\n{},{},{},{},{},{},{},{},{},{}\n",
            super::pixel::csv_field(&self.dataset),
            self.records,
            self.threshold,
            m.f1,
            auc,
            m.accuracy,
            m.counts.tp,
            m.counts.tn,
            m.counts.fp,
            m.counts.fn_
        )
    }

    pub fn summary_table(&self) -> String {
        let auc = self
            .metrics
            .auc
            .map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        format!(
            "{:<16}{:>8}{:>11}{:>11}{:>11}\n{:<16}{:>8}{:>11.4}{:>11}{:>11.4}\n",
            "dataset",
            "images",
            "f1",
            "auc",
            "accuracy",
            self.dataset.chars().take(15).collect::<String>(),
            self.records,
            self.metrics.f1,
            auc,
            self.metrics.accuracy
        )
    }
}
