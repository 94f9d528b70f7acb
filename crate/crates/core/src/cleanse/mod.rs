//! Near-duplicate detection for label-leakage removal: pairwise SSIM over
//! manipulated images, thresholded into a graph whose connected components
//! collapse to one representative each.

mod groups;
mod ssim;

use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{bilinear_resize, load_luma, Manifest};
use crate::error::{Error, Result};
use crate::parallel::Workers;

pub use groups::{group, Component, SimilarityGroups, SimilarityMatrix, UnionFind};
pub use ssim::{ssim, ssim_stats, window_weights, SsimStats, C1, C2, WINDOW, WINDOW_SIGMA};

pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_RESIZE: (u32, u32) = (256, 256);

/// Bilinear resize of a grayscale plane, rounded back to 8 bits.
pub fn resize_gray(img: &GrayImage, width: u32, height: u32) -> GrayImage {
    if img.dimensions() == (width, height) {
        return img.clone();
    }
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let out = bilinear_resize(&src, img.width(), img.height(), width, height)
        .into_iter()
        .map(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_raw(width, height, out).expect("buffer sized to image")
}

/// Pairwise SSIM of `images` after resizing each to `resize`. Only the upper
/// triangle is computed; the diagonal is exactly 1.
pub fn similarity_matrix(
    images: &[(String, GrayImage)],
    resize: (u32, u32),
    workers: Workers,
) -> Result<SimilarityMatrix> {
    let n = images.len();
    if n < 2 {
        return Err(Error::InvalidArgument("similarity needs at least two images".into()));
    }
    let stats: Vec<SsimStats> = workers.install(|| {
        images
            .par_iter()
            .map(|(_, img)| SsimStats::new(&resize_gray(img, resize.0, resize.1)))
            .collect::<Result<Vec<_>>>()
    })?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = workers.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| ssim_stats(&stats[i], &stats[j]))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        matrix[i * n + i] = 1.0;
    }
    for (&(i, j), v) in pairs.iter().zip(values) {
        matrix[i * n + j] = v;
        matrix[j * n + i] = v;
    }
    SimilarityMatrix::new(images.iter().map(|(id, _)| id.clone()).collect(), matrix)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub members: Vec<String>,
    pub representative: String,
    /// `[i, j, ssim]` for every member pair, indices into `ids`.
    pub pairwise: Vec<(usize, usize, f64)>,
}

/// Review document for the grouping step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub threshold: f64,
    pub resize: [u32; 2],
    /// Row order of the similarity matrix and heatmap.
    pub ids: Vec<String>,
    pub components: Vec<ComponentReport>,
    pub input_manipulated: usize,
    pub kept_manipulated: usize,
    pub authentic_passed_through: usize,
}

pub struct CleanseOutcome {
    pub manifest: Manifest,
    pub groups: SimilarityGroups,
    pub matrix: SimilarityMatrix,
    pub report: GroupReport,
}

/// Keeps one representative per similarity component among the manipulated
/// samples; authentic samples pass through. Order follows the input manifest.
pub fn cleanse_dataset(
    manifest: &Manifest,
    threshold: f64,
    resize: (u32, u32),
    workers: Workers,
) -> Result<CleanseOutcome> {
    let targets: Vec<&crate::corpus::SampleRecord> = manifest.manipulated().collect();
    if targets.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cleansing needs at least two manipulated samples, found {}",
            targets.len()
        )));
    }
    let loaded: Vec<Result<GrayImage>> = workers.install(|| {
        targets
            .par_iter()
            .map(|s| load_luma(&manifest.resolve(&s.image_path)))
            .collect()
    });
    let mut images = Vec::with_capacity(targets.len());
    let mut failures = Vec::new();
    for (s, r) in targets.iter().zip(loaded) {
        match r {
            Ok(img) => images.push((s.id.clone(), img)),
            Err(e) => failures.push(format!("{}: {e}", s.id)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::DecodeFailures(failures));
    }

    let matrix = similarity_matrix(&images, resize, workers)?;
    let groups = group(&matrix, threshold)?;
    let keep: std::collections::HashSet<&str> = groups.representatives().collect();
    let samples = manifest
        .samples
        .iter()
        .filter(|s| !s.label.is_manipulated() || keep.contains(s.id.as_str()))
        .cloned()
        .collect();
    let cleansed = Manifest::new(manifest.dataset_name.clone(), samples, manifest.root.clone())?;

    let components = groups
        .components
        .iter()
        .map(|c| ComponentReport {
            members: c.members.clone(),
            representative: c.representative.clone(),
            pairwise: c
                .indices
                .iter()
                .enumerate()
                .flat_map(|(a, &i)| c.indices[a + 1..].iter().map(move |&j| (i, j)))
                .map(|(i, j)| (i, j, matrix.get(i, j)))
                .collect(),
        })
        .collect();
    let report = GroupReport {
        threshold,
        resize: [resize.0, resize.1],
        ids: matrix.ids.clone(),
        components,
        input_manipulated: targets.len(),
        kept_manipulated: keep.len(),
        authentic_passed_through: manifest.len() - targets.len(),
    };
    Ok(CleanseOutcome {
        manifest: cleansed,
        groups,
        matrix,
        report,
    })
}

impl GroupReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
