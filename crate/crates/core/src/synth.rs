//! Naive tamper synthesis: square copy-move and border-mean fill, each with
//! an exact ground-truth mask, plus generators for self-checking corpora.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_mask_png, BinaryMask, Label, Manifest, SampleRecord};
use crate::error::{Error, Result};
use crate::parallel::Workers;
use crate::seed::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperKind {
    CopyMove,
    Inpaint,
}

impl TamperKind {
    pub fn name(self) -> &'static str {
        match self {
            TamperKind::CopyMove => "copy_move",
            TamperKind::Inpaint => "inpaint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "copy_move" | "copymove" => Some(TamperKind::CopyMove),
            "inpaint" => Some(TamperKind::Inpaint),
            _ => None,
        }
    }
}

pub const DEFAULT_AREA_RANGE: (f64, f64) = (0.01, 0.15);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamperSpec {
    pub kind: TamperKind,
    pub area_fraction_range: (f64, f64),
    pub seed: u64,
}

impl TamperSpec {
    pub fn new(kind: TamperKind, area_fraction_range: (f64, f64), seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            area_fraction_range,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.area_fraction_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "area fraction range must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// A square region, top-left corner plus side length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Square {
    pub x: u32,
    pub y: u32,
    pub side: u32,
}

impl Square {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.side && y >= self.y && y < self.y + self.side
    }

    fn mask(&self, width: u32, height: u32) -> Result<BinaryMask> {
        BinaryMask::from_fn(width, height, |x, y| self.contains(x, y))
    }
}

/// Side drawn uniformly from `[ceil(sqrt(lo) m), floor(sqrt(hi) m)]`, with
/// `m = min(W, H)` and the upper end capped at `max_side`.
fn draw_side(spec: &TamperSpec, m: u32, max_side: u32, rng: &mut ChaCha12Rng) -> Result<u32> {
    spec.validate()?;
    let (lo, hi) = spec.area_fraction_range;
    let lo_side = ((lo.sqrt() * m as f64).ceil() as u32).max(1);
    let hi_side = ((hi.sqrt() * m as f64).floor() as u32).min(max_side);
    if lo_side > hi_side {
        return Err(Error::TooSmall(format!(
            "a {m}-pixel short side cannot hold the requested tamper region"
        )));
    }
    Ok(rng.random_range(lo_side..=hi_side))
}

fn check_dims(img: &RgbImage) -> Result<u32> {
    let m = img.width().min(img.height());
    if m < 3 {
        return Err(Error::TooSmall(format!("{}x{} image", img.width(), img.height())));
    }
    Ok(m)
}

/// Copies a random square to a different random position. The mask is the
/// destination square; reads come from the untouched input, so overlapping
/// squares copy cleanly.
pub fn copy_move(img: &RgbImage, spec: &TamperSpec, sample_id: &str) -> Result<(RgbImage, BinaryMask)> {
    let m = check_dims(img)?;
    let mut rng = rng_for(spec.seed, "copy_move", sample_id, 0);
    let side = draw_side(spec, m, m - 1, &mut rng)?;
    let (w, h) = img.dimensions();
    let src = (rng.random_range(0..=w - side), rng.random_range(0..=h - side));
    let dst = loop {
        let d = (rng.random_range(0..=w - side), rng.random_range(0..=h - side));
        if d != src {
            break d;
        }
    };
    let mut out = img.clone();
    for dy in 0..side {
        for dx in 0..side {
            out.put_pixel(dst.0 + dx, dst.1 + dy, *img.get_pixel(src.0 + dx, src.1 + dy));
        }
    }
    let region = Square {
        x: dst.0,
        y: dst.1,
        side,
    };
    Ok((out, region.mask(w, h)?))
}

/// Pixels of the one-pixel ring around `sq`, which must lie at least one pixel
/// inside the image.
pub fn border_ring(sq: &Square) -> impl Iterator<Item = (u32, u32)> {
    let (x0, y0, x1, y1) = (sq.x - 1, sq.y - 1, sq.x + sq.side, sq.y + sq.side);
    let top_bottom = (x0..=x1).flat_map(move |x| [(x, y0), (x, y1)]);
    let sides = (sq.y..y1).flat_map(move |y| [(x0, y), (x1, y)]);
    top_bottom.chain(sides)
}

/// Per-channel mean of the border ring, rounded half up.
pub fn ring_mean(img: &RgbImage, sq: &Square) -> Rgb<u8> {
    let mut sum = [0u64; 3];
    let mut count = 0u64;
    for (x, y) in border_ring(sq) {
        let p = img.get_pixel(x, y);
        for c in 0..3 {
            sum[c] += p[c] as u64;
        }
        count += 1;
    }
    Rgb(sum.map(|s| ((2 * s + count) / (2 * count)) as u8))
}

/// Replaces a random square by the mean colour of its border ring.
pub fn inpaint(img: &RgbImage, spec: &TamperSpec, sample_id: &str) -> Result<(RgbImage, BinaryMask)> {
    let m = check_dims(img)?;
    let mut rng = rng_for(spec.seed, "inpaint", sample_id, 0);
    let side = draw_side(spec, m, m - 2, &mut rng)?;
    let (w, h) = img.dimensions();
    let sq = Square {
        x: rng.random_range(1..=w - side - 1),
        y: rng.random_range(1..=h - side - 1),
        side,
    };
    let fill = ring_mean(img, &sq);
    let mut out = img.clone();
    for y in sq.y..sq.y + side {
        for x in sq.x..sq.x + side {
            out.put_pixel(x, y, fill);
        }
    }
    Ok((out, sq.mask(w, h)?))
}

pub fn tamper(img: &RgbImage, spec: &TamperSpec, sample_id: &str) -> Result<(RgbImage, BinaryMask)> {
    match spec.kind {
        TamperKind::CopyMove => copy_move(img, spec, sample_id),
        TamperKind::Inpaint => inpaint(img, spec, sample_id),
    }
}

/// Seeded base image: per-channel linear gradient, a low-frequency wave
/// and mild Gaussian grain shared by all channels.
pub fn base_image(width: u32, height: u32, seed: u64, sample_id: &str) -> RgbImage {
    let mut rng = rng_for(seed, "base_image", sample_id, 0);
    let mut params = [[0.0f64; 7]; 3];
    for p in params.iter_mut() {
        *p = [
            rng.random_range(40.0..200.0),
            rng.random_range(-80.0..80.0),
            rng.random_range(-80.0..80.0),
            rng.random_range(10.0..35.0),
            rng.random_range(1.0..6.0),
            rng.random_range(1.0..6.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        ];
    }
    let grain = Normal::new(0.0, 6.0).expect("positive sigma");
    let (fw, fh) = (width.max(1) as f64, height.max(1) as f64);
    let mut img = RgbImage::new(width, height);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let (u, v) = (x as f64 / fw, y as f64 / fh);
        let g = grain.sample(&mut rng);
        for c in 0..3 {
            let [base, gx, gy, amp, fx, fy, phase] = params[c];
            let wave = amp * (std::f64::consts::TAU * (fx * u + fy * v) + phase).sin();
            let value = base + gx * (u - 0.5) + gy * (v - 0.5) + wave + g;
            px[c] = value.round().clamp(0.0, 255.0) as u8;
        }
    }
    img
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Encode(format!("{}: {e}", path.display())))
}

pub const PREDICTION_SETS: [&str; 3] = ["perfect", "empty", "complement"];

/// Generates `n` tampered samples under `out`:
///
/// ```text
/// images/<id>.png  masks/<id>.png  manifest.json
/// preds/perfect/<id>.png  preds/empty/<id>.png  preds/complement/<id>.png
/// ```
pub fn build_test_corpus(
    n: usize,
    size: (u32, u32),
    spec: &TamperSpec,
    out: &Path,
    workers: Workers,
) -> Result<Manifest> {
    if n == 0 {
        return Err(Error::InvalidArgument("corpus size must be positive".into()));
    }
    spec.validate()?;
    let mut dirs = vec![out.join("images"), out.join("masks")];
    dirs.extend(PREDICTION_SETS.iter().map(|s| out.join("preds").join(s)));
    create_dirs(&dirs)?;
    let width = n.saturating_sub(1).to_string().len().max(4);
    let ids: Vec<String> = (0..n).map(|i| format!("synth_{i:0width$}")).collect();
    let records = workers.install(|| {
        ids.par_iter()
            .map(|id| {
                let base = base_image(size.0, size.1, spec.seed, id);
                let (img, mask) = tamper(&base, spec, id)?;
                write_sample(out, id, &img, &mask)?;
                for (set, pred) in
                    PREDICTION_SETS
                        .iter()
                        .zip([mask.clone(), BinaryMask::zeros(size.0, size.1)?, mask.complement()])
                {
                    write_mask_png(&pred, &out.join("preds").join(set).join(format!("{id}.png")))?;
                }
                Ok(manipulated_record(id))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let manifest = Manifest::new(format!("synthetic-{}", spec.kind.name()), records, out)?;
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

fn create_dirs(dirs: &[std::path::PathBuf]) -> Result<()> {
    for d in dirs {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    Ok(())
}

fn write_sample(out: &Path, id: &str, img: &RgbImage, mask: &BinaryMask) -> Result<()> {
    save_png(img, &out.join("images").join(format!("{id}.png")))?;
    write_mask_png(mask, &out.join("masks").join(format!("{id}.png")))
}

fn manipulated_record(id: &str) -> SampleRecord {
    SampleRecord {
        id: id.to_string(),
        image_path: format!("images/{id}.png").into(),
        mask_path: Some(format!("masks/{id}.png").into()),
        label: Label::Manipulated,
    }
}

/// Corpus of `copies` small tampers of one shared base image plus `unique`
/// samples on independent bases, all manipulated. Cleansing it keeps
/// `unique + 1` samples.
pub fn build_duplicate_corpus(
    copies: usize,
    unique: usize,
    size: (u32, u32),
    seed: u64,
    out: &Path,
) -> Result<Manifest> {
    let spec = TamperSpec::new(TamperKind::CopyMove, (0.005, 0.01), seed)?;
    create_dirs(&[out.join("images"), out.join("masks")])?;
    let mut records = Vec::with_capacity(copies + unique);
    let shared = base_image(size.0, size.1, seed, "shared");
    for i in 0..copies {
        let id = format!("copy_{i:02}");
        let (img, mask) = copy_move(&shared, &spec, &id)?;
        write_sample(out, &id, &img, &mask)?;
        records.push(manipulated_record(&id));
    }
    for i in 0..unique {
        let id = format!("unique_{i:02}");
        let (img, mask) = copy_move(&base_image(size.0, size.1, seed, &id), &spec, &id)?;
        write_sample(out, &id, &img, &mask)?;
        records.push(manipulated_record(&id));
    }
    let manifest = Manifest::new("synthetic-duplicates", records, out)?;
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}
