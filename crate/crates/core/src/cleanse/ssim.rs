//! Mean SSIM over an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
//! K2 = 0.03, L = 255. Only windows fully inside the image contribute.
//!
//! Per-image window statistics (local mean and variance) are computed once
//! and reused, so a pair only costs one extra filtering pass for the cross
//! term. The expression is symmetric in its arguments, which makes
//! `ssim(a, b) == ssim(b, a)` hold bit for bit.

use image::GrayImage;

use crate::error::{Error, Result};

pub const WINDOW: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Normalized 1-D window weights; the 2-D window is their outer product.
pub fn window_weights() -> [f64; WINDOW] {
    let c = (WINDOW / 2) as f64;
    let mut w = [0.0; WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        *v = (-((i as f64 - c).powi(2)) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable filtering over fully-contained windows. Output is
/// `(w - 10) x (h - 10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, wt) in k.iter().enumerate() {
                acc += wt * row[x + j];
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (i, wt) in k.iter().enumerate() {
            let row = &horiz[(y + i) * ow..(y + i + 1) * ow];
            let dst = &mut out[y * ow..(y + 1) * ow];
            for (d, s) in dst.iter_mut().zip(row) {
                *d += wt * s;
            }
        }
    }
    out
}

/// Cached window statistics of one image.
#[derive(Clone, Debug)]
pub struct SsimStats {
    width: u32,
    height: u32,
    pixels: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl SsimStats {
    pub fn new(img: &GrayImage) -> Result<Self> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        if w < WINDOW || h < WINDOW {
            return Err(Error::TooSmall(format!(
                "SSIM needs at least {WINDOW}x{WINDOW} pixels, got {w}x{h}"
            )));
        }
        let k = window_weights();
        let pixels: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
        let squares: Vec<f64> = pixels.iter().map(|v| v * v).collect();
        let mean = filter_valid(&pixels, w, h, &k);
        let second = filter_valid(&squares, w, h, &k);
        let variance = second.iter().zip(&mean).map(|(s, m)| s - m * m).collect();
        Ok(Self {
            width: img.width(),
            height: img.height(),
            pixels,
            mean,
            variance,
        })
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// SSIM from two precomputed statistics sets.
pub fn ssim_stats(a: &SsimStats, b: &SsimStats) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let (w, h) = (a.width as usize, a.height as usize);
    let products: Vec<f64> = a.pixels.iter().zip(&b.pixels).map(|(x, y)| x * y).collect();
    let cross = filter_valid(&products, w, h, &window_weights());
    let mut total = 0.0;
    for i in 0..cross.len() {
        let (mx, my) = (a.mean[i], b.mean[i]);
        let mxy = mx * my;
        let covariance = cross[i] - mxy;
        let num = (2.0 * mxy + C1) * (2.0 * covariance + C2);
        let den = (mx * mx + my * my + C1) * (a.variance[i] + b.variance[i] + C2);
        total += num / den;
    }
    Ok(total / cross.len() as f64)
}

/// Mean SSIM of two equally sized 8-bit grayscale images (each at least 11x11).
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: a.dimensions(),
            found: b.dimensions(),
        });
    }
    ssim_stats(&SsimStats::new(a)?, &SsimStats::new(b)?)
}
