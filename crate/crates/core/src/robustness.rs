//! Deterministic perturbations (Gaussian blur, Gaussian noise, JPEG
//! recompression) for building leveled robustness corpora, and the harness
//! that turns per-level evaluations into a curve.
//!
//! Ground-truth masks are never perturbed.

use std::path::{Path, PathBuf};

use image::RgbImage;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_rgb, Manifest};
use crate::error::{Error, Result};
use crate::metrics::pixel::{evaluate_pixel, Metric, PixelAggregate, PixelOptions, PixelReport};
use crate::parallel::Workers;
use crate::seed::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    /// Level = odd kernel size in pixels, 0 for identity.
    GaussianBlur,
    /// Level = standard deviation on the 0-255 scale.
    GaussianNoise,
    /// Level = JPEG quality in 1..=100.
    JpegCompress,
}

impl PerturbKind {
    pub fn name(self) -> &'static str {
        match self {
            PerturbKind::GaussianBlur => "gaussian_blur",
            PerturbKind::GaussianNoise => "gaussian_noise",
            PerturbKind::JpegCompress => "jpeg_compress",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        match s.as_str() {
            "gaussian_blur" | "blur" => Some(PerturbKind::GaussianBlur),
            "gaussian_noise" | "noise" => Some(PerturbKind::GaussianNoise),
            "jpeg_compress" | "jpeg" => Some(PerturbKind::JpegCompress),
            _ => None,
        }
    }

    pub fn default_levels(self) -> Vec<f64> {
        match self {
            PerturbKind::GaussianBlur => vec![0.0, 3.0, 7.0, 11.0, 15.0, 19.0],
            PerturbKind::GaussianNoise => vec![0.0, 3.0, 7.0, 11.0, 15.0, 23.0],
            PerturbKind::JpegCompress => vec![100.0, 90.0, 80.0, 70.0, 60.0, 50.0],
        }
    }
}

impl std::fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    pub levels: Vec<f64>,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn new(kind: PerturbKind, levels: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self { kind, levels, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one perturbation level is required".into(),
            ));
        }
        for &l in &self.levels {
            let ok = match self.kind {
                PerturbKind::GaussianBlur => l >= 0.0 && l.fract() == 0.0 && (l == 0.0 || l % 2.0 == 1.0),
                PerturbKind::GaussianNoise => l.is_finite() && l >= 0.0,
                PerturbKind::JpegCompress => l.fract() == 0.0 && (1.0..=100.0).contains(&l),
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("invalid {} level {l}", self.kind)));
            }
        }
        Ok(())
    }

    /// Directory name used for a level (`3`, `2.5`, ...).
    pub fn level_name(&self, index: usize) -> String {
        self.levels[index].to_string()
    }

    fn is_identity(&self, index: usize) -> bool {
        match self.kind {
            PerturbKind::GaussianBlur | PerturbKind::GaussianNoise => self.levels[index] == 0.0,
            PerturbKind::JpegCompress => false,
        }
    }
}

/// Sigma derived from an odd kernel size: `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn blur_sigma(kernel: usize) -> f64 {
    0.3 * ((kernel as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian weights of odd length `kernel`.
pub fn gaussian_kernel(kernel: usize) -> Vec<f64> {
    let sigma = blur_sigma(kernel);
    let c = (kernel / 2) as f64;
    let raw: Vec<f64> = (0..kernel)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Mirror index without repeating the edge pixel (`dcb|abcd|cba`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Separable Gaussian blur with reflected borders. `kernel` 0 or 1 is a no-op.
pub fn gaussian_blur(img: &RgbImage, kernel: usize) -> RgbImage {
    if kernel <= 1 {
        return img.clone();
    }
    let weights = gaussian_kernel(kernel);
    let r = (kernel / 2) as isize;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let src = img.as_raw();
    let mut horiz = vec![0.0f64; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (k, wt) in weights.iter().enumerate() {
                let sx = reflect(x as isize + k as isize - r, w);
                let p = (y * w + sx) * 3;
                for c in 0..3 {
                    acc[c] += wt * src[p + c] as f64;
                }
            }
            horiz[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&acc);
        }
    }
    let mut out = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (k, wt) in weights.iter().enumerate() {
                let sy = reflect(y as isize + k as isize - r, h);
                let p = (sy * w + x) * 3;
                for c in 0..3 {
                    acc[c] += wt * horiz[p + c];
                }
            }
            for c in 0..3 {
                out[(y * w + x) * 3 + c] = round_u8(acc[c]);
            }
        }
    }
    RgbImage::from_raw(w as u32, h as u32, out).expect("buffer sized to image")
}

/// Adds i.i.d. `N(0, sigma)` to every channel, rounds and clamps.
pub fn gaussian_noise(img: &RgbImage, sigma: f64, rng: &mut impl rand::Rng) -> Result<RgbImage> {
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = img.clone();
    for v in out.iter_mut() {
        *v = round_u8(*v as f64 + normal.sample(rng));
    }
    Ok(out)
}

/// Encodes at `quality` with 4:2:0 chroma subsampling and decodes again.
pub fn jpeg_roundtrip(img: &RgbImage, quality: u8) -> Result<RgbImage> {
    let (w, h) = (img.width(), img.height());
    let (Ok(w16), Ok(h16)) = (u16::try_from(w), u16::try_from(h)) else {
        return Err(Error::Encode(format!("{w}x{h} exceeds the JPEG size limit")));
    };
    let mut buf = Vec::new();
    let mut encoder = jpeg_encoder::Encoder::new(&mut buf, quality);
    encoder.set_sampling_factor(jpeg_encoder::SamplingFactor::R_4_2_0);
    encoder
        .encode(img.as_raw(), w16, h16, jpeg_encoder::ColorType::Rgb)
        .map_err(|e| Error::Encode(e.to_string()))?;
    let decoded = image::load_from_memory_with_format(&buf, image::ImageFormat::Jpeg)
        .map_err(|e| Error::Encode(format!("JPEG decode after encode failed: {e}")))?;
    Ok(decoded.to_rgb8())
}

/// Applies level `level_index` of `spec` to one image. Noise is seeded from
/// `(spec.seed, sample_id, level_index)` only.
pub fn perturb_image(img: &RgbImage, spec: &PerturbSpec, level_index: usize, sample_id: &str) -> Result<RgbImage> {
    let Some(&level) = spec.levels.get(level_index) else {
        return Err(Error::InvalidArgument(format!(
            "level index {level_index} out of range ({} levels)",
            spec.levels.len()
        )));
    };
    spec.validate()?;
    match spec.kind {
        PerturbKind::GaussianBlur => Ok(gaussian_blur(img, level as usize)),
        PerturbKind::GaussianNoise => {
            let mut rng = rng_for(spec.seed, "gaussian_noise", sample_id, level_index as u64);
            gaussian_noise(img, level, &mut rng)
        }
        PerturbKind::JpegCompress => jpeg_roundtrip(img, level as u8),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedFile {
    pub id: String,
    pub level: f64,
    pub path: PathBuf,
}

/// Writes `<out>/<kind>/<level>/<id>.png` for every sample and level.
///
/// Identity levels copy PNG inputs byte for byte.
pub fn perturb_corpus(
    manifest: &Manifest,
    spec: &PerturbSpec,
    out: &Path,
    workers: Workers,
) -> Result<Vec<PerturbedFile>> {
    spec.validate()?;
    let level_dirs: Vec<PathBuf> = (0..spec.levels.len())
        .map(|i| out.join(spec.kind.name()).join(spec.level_name(i)))
        .collect();
    for d in &level_dirs {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let jobs: Vec<(usize, usize)> = (0..manifest.len())
        .flat_map(|s| (0..spec.levels.len()).map(move |l| (s, l)))
        .collect();
    let results: Vec<Result<PerturbedFile>> = workers.install(|| {
        jobs.par_iter()
            .map(|&(s, l)| {
                let record = &manifest.samples[s];
                let src = manifest.resolve(&record.image_path);
                let dst = level_dirs[l].join(format!("{}.png", record.id));
                let is_png = src.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
                if spec.is_identity(l) && is_png {
                    std::fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
                } else {
                    let img = load_rgb(&src)?;
                    perturb_image(&img, spec, l, &record.id)?
                        .save_with_format(&dst, image::ImageFormat::Png)
                        .map_err(|e| Error::Encode(format!("{}: {e}", dst.display())))?;
                }
                Ok(PerturbedFile {
                    id: record.id.clone(),
                    level: spec.levels[l],
                    path: dst,
                })
            })
            .collect()
    });
    results
        .into_iter()
        .zip(&jobs)
        .map(|(r, &(s, _))| r.map_err(|e| e.in_sample(&manifest.samples[s].id)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: f64,
    pub aggregate: PixelAggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCurve {
    pub kind: PerturbKind,
    pub points: Vec<CurvePoint>,
}

impl RobustnessCurve {
    /// Builds a curve from one pixel report per level, in level order.
    pub fn from_reports(kind: PerturbKind, levels: &[f64], reports: &[PixelReport]) -> Result<Self> {
        if levels.len() != reports.len() {
            return Err(Error::InvalidArgument(format!(
                "{} levels but {} reports",
                levels.len(),
                reports.len()
            )));
        }
        Ok(Self {
            kind,
            points: levels
                .iter()
                .zip(reports)
                .map(|(&level, r)| CurvePoint {
                    level,
                    aggregate: r.aggregate.clone(),
                })
                .collect(),
        })
    }

    /// Long-format CSV: `kind,level,metric,value`, levels in order.
    pub fn to_csv(&self, metrics: &[Metric]) -> String {
        let mut out = String::from("kind,level,metric,value\n");
        for p in &self.points {
            for &m in metrics {
                let value = p.aggregate.metrics.get(m).map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!("{},{},{},{}\n", self.kind, p.level, m, value));
            }
        }
        out
    }
}

/// Evaluates one prediction directory per level and assembles the curve.
pub fn run_robustness(
    manifest: &Manifest,
    pred_dirs: &[PathBuf],
    spec: &PerturbSpec,
    opts: &PixelOptions,
    workers: Workers,
) -> Result<RobustnessCurve> {
    spec.validate()?;
    if pred_dirs.len() != spec.levels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} levels but {} prediction directories",
            spec.levels.len(),
            pred_dirs.len()
        )));
    }
    let reports = pred_dirs
        .iter()
        .map(|d| evaluate_pixel(manifest, d, opts, workers))
        .collect::<Result<Vec<_>>>()?;
    RobustnessCurve::from_reports(spec.kind, &spec.levels, &reports)
}
