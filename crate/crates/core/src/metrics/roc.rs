//! ROC construction and trapezoid-rule AUC over every distinct score.
//!
//! Thresholds are the distinct score values, a sample counting as positive
//! when `score >= threshold`. Tied scores therefore share one ROC point and the
//! trapezoid area equals the Mann-Whitney statistic with half credit for ties.
//! The doubled area is accumulated in integers, so the only rounding is the
//! final division.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    /// Decision threshold; `+inf` for the virtual `(0, 0)` origin.
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Order-preserving key for a non-negative `f32` (maps `-0.0` to `0`).
#[inline]
pub fn f32_key(v: f32) -> u32 {
    v.to_bits() & 0x7fff_ffff
}

/// Order-preserving key for a non-negative `f64`.
#[inline]
pub fn f64_key(v: f64) -> u64 {
    v.to_bits() & 0x7fff_ffff_ffff_ffff
}

/// Walks distinct thresholds from the highest down, yielding cumulative
/// `(threshold_key, tp, fp)` after each threshold.
fn walk<K: Ord + Copy>(pos: &[K], neg: &[K], mut visit: impl FnMut(K, u64, u64)) {
    let (mut i, mut j) = (pos.len(), neg.len());
    let (mut tp, mut fp) = (0u64, 0u64);
    while i > 0 || j > 0 {
        let t = match (i > 0, j > 0) {
            (true, true) => pos[i - 1].max(neg[j - 1]),
            (true, false) => pos[i - 1],
            _ => neg[j - 1],
        };
        while i > 0 && pos[i - 1] == t {
            i -= 1;
            tp += 1;
        }
        while j > 0 && neg[j - 1] == t {
            j -= 1;
            fp += 1;
        }
        visit(t, tp, fp);
    }
}

fn check_classes(p: usize, n: usize) -> Result<()> {
    if p == 0 || n == 0 {
        return Err(Error::UndefinedAuc);
    }
    Ok(())
}

/// Trapezoid AUC from ascending-sorted positive and negative keys.
pub fn auc_sorted<K: Ord + Copy>(pos: &[K], neg: &[K]) -> Result<f64> {
    check_classes(pos.len(), neg.len())?;
    debug_assert!(pos.windows(2).all(|w| w[0] <= w[1]) && neg.windows(2).all(|w| w[0] <= w[1]));
    // twice the area in units of 1/(P*N): Σ (fp' - fp)(tp + tp')
    let mut doubled: u128 = 0;
    let (mut last_tp, mut last_fp) = (0u64, 0u64);
    walk(pos, neg, |_, tp, fp| {
        doubled += (fp - last_fp) as u128 * (tp + last_tp) as u128;
        last_tp = tp;
        last_fp = fp;
    });
    Ok(doubled as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Marks a labeled key as positive.
pub const POSITIVE_BIT: u32 = 1 << 31;

/// Packs an `f32` score and its class into one word.
#[inline]
pub fn labeled_key(v: f32, positive: bool) -> u32 {
    f32_key(v) | ((positive as u32) << 31)
}

const BUCKET_SHIFT: u32 = 15;
const BUCKETS: usize = 1 << 16;

#[derive(Clone, Copy)]
struct Bucket {
    pos: u64,
    neg: u64,
    min: u32,
    max: u32,
}

impl Bucket {
    fn mixed(&self) -> bool {
        self.min < self.max
    }
}

/// A re-iterable sequence of labeled keys (see [`labeled_key`]).
pub trait LabeledKeys {
    fn for_each_key(&self, f: impl FnMut(u32));
}

impl LabeledKeys for [u32] {
    fn for_each_key(&self, f: impl FnMut(u32)) {
        self.iter().copied().for_each(f);
    }
}

/// AUC of labeled `f32` keys.
///
/// Keys are histogrammed on their top 16 bits. A bucket holding one distinct
/// score is a single threshold and needs no ordering; only buckets with
/// several distinct scores are gathered, in a second pass, and sorted.
/// Quantized score maps (8-bit PNGs) therefore cost one counting pass.
pub fn auc_labeled<K: LabeledKeys + ?Sized>(keys: &K) -> Result<f64> {
    let mut buckets = vec![
        Bucket {
            pos: 0,
            neg: 0,
            min: u32::MAX,
            max: 0,
        };
        BUCKETS
    ];
    keys.for_each_key(|k| {
        let key = k & !POSITIVE_BIT;
        let b = &mut buckets[(key >> BUCKET_SHIFT) as usize];
        if k & POSITIVE_BIT != 0 {
            b.pos += 1;
        } else {
            b.neg += 1;
        }
        b.min = b.min.min(key);
        b.max = b.max.max(key);
    });
    let p: u64 = buckets.iter().map(|b| b.pos).sum();
    let n: u64 = buckets.iter().map(|b| b.neg).sum();
    check_classes(p as usize, n as usize)?;

    // contiguous, key-sorted segments for the mixed buckets
    let mut start = vec![0usize; BUCKETS + 1];
    for (i, b) in buckets.iter().enumerate() {
        start[i + 1] = start[i] + if b.mixed() { (b.pos + b.neg) as usize } else { 0 };
    }
    let mut gathered = vec![0u32; start[BUCKETS]];
    if !gathered.is_empty() {
        let mut fill = start.clone();
        keys.for_each_key(|k| {
            let i = ((k & !POSITIVE_BIT) >> BUCKET_SHIFT) as usize;
            if buckets[i].mixed() {
                gathered[fill[i]] = k;
                fill[i] += 1;
            }
        });
        for i in 0..BUCKETS {
            gathered[start[i]..start[i + 1]].sort_unstable_by_key(|k| k & !POSITIVE_BIT);
        }
    }

    // twice the area in units of 1/(P*N): Σ (fp' - fp)(tp + tp')
    let mut doubled: u128 = 0;
    let mut tp = 0u64;
    let mut step = |dp: u64, dn: u64| {
        doubled += dn as u128 * (2 * tp + dp) as u128;
        tp += dp;
    };
    for i in (0..BUCKETS).rev() {
        let b = &buckets[i];
        if !b.mixed() {
            if b.pos + b.neg > 0 {
                step(b.pos, b.neg);
            }
            continue;
        }
        let seg = &gathered[start[i]..start[i + 1]];
        let mut end = seg.len();
        while end > 0 {
            let key = seg[end - 1] & !POSITIVE_BIT;
            let (mut dp, mut dn) = (0, 0);
            while end > 0 && seg[end - 1] & !POSITIVE_BIT == key {
                if seg[end - 1] & POSITIVE_BIT != 0 {
                    dp += 1;
                } else {
                    dn += 1;
                }
                end -= 1;
            }
            step(dp, dn);
        }
    }
    Ok(doubled as f64 / (2.0 * p as f64 * n as f64))
}

/// AUC of `f64` scores with boolean labels (`true` = positive).
pub fn auc_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (mut pos, mut neg) = split_keys(scores, labels)?;
    check_classes(pos.len(), neg.len())?;
    pos.sort_unstable();
    neg.sort_unstable();
    auc_sorted(&pos, &neg)
}

fn split_keys(scores: &[f64], labels: &[bool]) -> Result<(Vec<u64>, Vec<u64>)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(v) = scores.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("score {v} is outside [0, 1]")));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &l) in scores.iter().zip(labels) {
        if l {
            pos.push(f64_key(s))
        } else {
            neg.push(f64_key(s))
        }
    }
    Ok((pos, neg))
}

/// ROC points at every distinct score, preceded by the `(0, 0)` origin. The
/// last point is always `(1, 1)`.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    let (mut pos, mut neg) = split_keys(scores, labels)?;
    check_classes(pos.len(), neg.len())?;
    pos.sort_unstable();
    neg.sort_unstable();
    let (p, n) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    }];
    walk(&pos, &neg, |t, tp, fp| {
        points.push(RocPoint {
            threshold: f64::from_bits(t),
            tpr: tp as f64 / p,
            fpr: fp as f64 / n,
        })
    });
    Ok(points)
}

/// Plain trapezoid rule over a point sequence ordered by increasing FPR.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_pixel_example() {
        let scores = [0.9, 0.7, 0.8, 0.3, 0.2, 0.1];
        let labels = [true, true, false, false, false, false];
        assert_eq!(auc_scores(&scores, &labels).unwrap(), 0.875);
        let pts = roc_points(&scores, &labels).unwrap();
        assert_eq!(pts.len(), 7);
        assert_eq!(trapezoid_area(&pts), 0.875);
        let last = pts.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
    }

    #[test]
    fn ties_share_a_point() {
        let pts = roc_points(&[0.5, 0.5, 0.5], &[true, false, false]).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(auc_scores(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auc_scores(&[0.1, 0.2], &[true, true]),
            Err(Error::UndefinedAuc)
        ));
    }

    fn xorshift(state: &mut u64) -> u64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        *state
    }

    fn check_labeled(scores: &[f32], labels: &[bool]) {
        let keys: Vec<u32> = scores.iter().zip(labels).map(|(&s, &l)| labeled_key(s, l)).collect();
        let wide: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
        assert_eq!(
            auc_labeled(keys.as_slice()).unwrap(),
            auc_scores(&wide, labels).unwrap()
        );
    }

    #[test]
    fn labeled_matches_sorted_path() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for levels in [1u64, 2, 7, 255, 1 << 20] {
            let scores: Vec<f32> = (0..5000)
                .map(|_| (xorshift(&mut state) % (levels + 1)) as f32 / levels as f32)
                .collect();
            let labels: Vec<bool> = (0..5000)
                .map(|i| (xorshift(&mut state) % 3 == 0) ^ (scores[i] > 0.6))
                .collect();
            check_labeled(&scores, &labels);
        }
    }

    #[test]
    fn labeled_handles_neighbouring_keys_in_one_bucket() {
        let base = 0.5f32;
        let next = f32::from_bits(base.to_bits() + 1);
        check_labeled(
            &[base, next, next, base, 0.0, 1.0],
            &[true, false, true, false, false, true],
        );
        assert!(matches!(
            auc_labeled(&[labeled_key(0.3, true)][..]),
            Err(Error::UndefinedAuc)
        ));
    }

    #[test]
    fn negative_zero_keys_as_zero() {
        assert_eq!(f32_key(-0.0), f32_key(0.0));
        assert!(f32_key(0.25) < f32_key(0.5));
    }
}
