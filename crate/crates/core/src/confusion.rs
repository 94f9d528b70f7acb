//! Shape-mask-aware confusion counts, the reduction every pixel metric goes
//! through.
//!
//! Counting is done word-wise on the packed bit planes, so a 512x512 pair
//! costs 4096 popcount steps. All arithmetic is integer.

use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryMask, ShapeMask};
use crate::error::{Error, Result};
use crate::parallel::Workers;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub const fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Ground-truth positives (`tp + fn`).
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Ground-truth negatives (`tn + fp`).
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    /// Counts for the complemented prediction against the same ground truth.
    pub fn complement_pred(&self) -> Self {
        Self::new(self.fn_, self.fp, self.tn, self.tp)
    }

    /// Counts for the original prediction against the complemented ground truth.
    pub fn complement_gt(&self) -> Self {
        Self::new(self.fp, self.fn_, self.tp, self.tn)
    }

    /// Counts with both planes complemented: the negative class seen as positive.
    pub fn swap_classes(&self) -> Self {
        Self::new(self.tn, self.tp, self.fn_, self.fp)
    }
}

impl Add for ConfusionCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.tn + o.tn, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

fn check_same(expected: (u32, u32), found: (u32, u32)) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Counts `tp = Σ pred·gt·s`, `tn = Σ (1-pred)(1-gt)·s`, `fp = Σ pred·(1-gt)·s`,
/// `fn = Σ (1-pred)·gt·s`, with `s` the shape mask or all ones.
pub fn confusion(pred: &BinaryMask, gt: &BinaryMask, shape: Option<&ShapeMask>) -> Result<ConfusionCounts> {
    check_same(gt.dims(), pred.dims())?;
    let p = pred.words();
    let g = gt.words();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let valid = match shape {
        Some(s) => {
            check_same(gt.dims(), s.dims())?;
            for ((&p, &g), &s) in p.iter().zip(g).zip(s.words()) {
                tp += (p & g & s).count_ones() as u64;
                fp += (p & !g & s).count_ones() as u64;
                fn_ += (!p & g & s).count_ones() as u64;
            }
            s.valid_count()
        }
        None => {
            // tail bits are zero in both planes, so `!p & g` never counts them
            for (&p, &g) in p.iter().zip(g) {
                tp += (p & g).count_ones() as u64;
                fp += (p & !g).count_ones() as u64;
                fn_ += (!p & g).count_ones() as u64;
            }
            gt.len() as u64
        }
    };
    Ok(ConfusionCounts::new(tp, valid - tp - fp - fn_, fp, fn_))
}

/// One `(prediction, ground truth, optional shape)` triple.
pub type MaskTriple<'a> = (&'a BinaryMask, &'a BinaryMask, Option<&'a ShapeMask>);

/// Data-parallel [`confusion`] over a batch. Output order matches input order
/// and is independent of `workers`; the first failing pair is reported with
/// its index.
pub fn confusion_batch(pairs: &[MaskTriple<'_>], workers: Workers) -> Result<Vec<ConfusionCounts>> {
    let results: Vec<Result<ConfusionCounts>> =
        workers.install(|| pairs.par_iter().map(|&(p, g, s)| confusion(p, g, s)).collect());
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
