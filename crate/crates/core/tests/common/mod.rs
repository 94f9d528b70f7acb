//! Independent oracles shared by the integration tests. Each one is the
//! slowest obvious implementation of its quantity.

#![allow(dead_code)]

use forensic_eval::corpus::{BinaryMask, ScoreMap, ShapeMask};
use forensic_eval::ConfusionCounts;
use image::GrayImage;
use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pixel-by-pixel confusion counting.
pub fn count_loop(pred: &BinaryMask, gt: &BinaryMask, shape: Option<&ShapeMask>) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if shape.is_some_and(|s| !s.get(x, y)) {
                continue;
            }
            match (pred.get(x, y), gt.get(x, y)) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    c
}

/// Mann-Whitney statistic over all positive/negative pairs, ties count half.
pub fn rank_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|p| *p.1).map(|p| *p.0).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|p| !*p.1).map(|p| *p.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut twice = 0u64;
    for &p in &pos {
        for &n in &neg {
            twice += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Some(twice as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Boolean transitive closure by Warshall's algorithm, then the classes of
/// the reflexive closure ordered by smallest member.
pub fn warshall_classes(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut r: Vec<Vec<bool>> = adj.to_vec();
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| r[i][j]).collect();
        for &j in &class {
            seen[j] = true;
        }
        classes.push(class);
    }
    classes
}

/// Mean SSIM computed window by window with the full 2-D Gaussian weights.
pub fn ssim_window_loop(a: &GrayImage, b: &GrayImage) -> f64 {
    const K: usize = 11;
    let sigma = 1.5f64;
    let mut w2 = [[0.0f64; K]; K];
    let mut total = 0.0;
    for (i, row) in w2.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let (w, h) = (a.width() as usize, a.height() as usize);
    let mut sum = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - K {
        for x0 in 0..=w - K {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..K {
                for j in 0..K {
                    let wt = w2[i][j] / total;
                    let x = a.get_pixel((x0 + j) as u32, (y0 + i) as u32)[0] as f64;
                    let y = b.get_pixel((x0 + j) as u32, (y0 + i) as u32)[0] as f64;
                    mx += wt * x;
                    my += wt * y;
                    sxx += wt * x * x;
                    syy += wt * y * y;
                    sxy += wt * x * y;
                }
            }
            let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            windows += 1;
        }
    }
    sum / windows as f64
}

pub fn random_mask(r: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| r.random_bool(density)).unwrap()
}

/// Scores drawn from a few distinct levels so that ties are common.
pub fn random_scores(r: &mut ChaCha8Rng, w: u32, h: u32, levels: u32) -> ScoreMap {
    let data = (0..w * h)
        .map(|_| r.random_range(0..=levels) as f32 / levels as f32)
        .collect();
    ScoreMap::new(w, h, data).unwrap()
}

pub fn random_gray(r: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| image::Luma([r.random::<u8>()]))
}
