//! In-memory planes: packed bit masks and floating-point score maps.

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Row-major bit-per-pixel plane packed into 64-bit words.
///
/// Bits past `width * height` in the final word are always zero, so word-wise
/// popcounts never need a tail correction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitPlane {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitPlane")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ones", &self.count_ones())
            .finish()
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "plane dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

impl BitPlane {
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        let len = width as usize * height as usize;
        Ok(Self {
            width,
            height,
            words: vec![0; len.div_ceil(WORD_BITS)],
        })
    }

    pub fn ones(width: u32, height: u32) -> Result<Self> {
        let mut plane = Self::zeros(width, height)?;
        plane.words.iter_mut().for_each(|w| *w = !0);
        plane.clear_tail();
        Ok(plane)
    }

    /// Builds a plane from a predicate over `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut plane = Self::zeros(width, height)?;
        let mut i = 0usize;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    plane.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
                i += 1;
            }
        }
        Ok(plane)
    }

    /// Builds a plane from row-major booleans.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels for a {width}x{height} plane, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        let mut plane = Self::zeros(width, height)?;
        for (chunk, word) in bits.chunks(WORD_BITS).zip(plane.words.iter_mut()) {
            *word = chunk
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j));
        }
        Ok(plane)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.get_index(y as usize * self.width as usize + x as usize)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = y as usize * self.width as usize + x as usize;
        let bit = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= bit;
        } else {
            self.words[i / WORD_BITS] &= !bit;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.clear_tail();
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get_index(i)).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len() % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Ground-truth or binarized prediction mask; 1 = manipulated.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BinaryMask(BitPlane);

impl BinaryMask {
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        BitPlane::zeros(width, height).map(Self)
    }

    pub fn ones(width: u32, height: u32) -> Result<Self> {
        BitPlane::ones(width, height).map(Self)
    }

    pub fn from_fn(width: u32, height: u32, f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        BitPlane::from_fn(width, height, f).map(Self)
    }

    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        BitPlane::from_bools(width, height, bits).map(Self)
    }

    pub fn from_plane(plane: BitPlane) -> Self {
        Self(plane)
    }

    pub fn plane(&self) -> &BitPlane {
        &self.0
    }

    pub fn into_plane(self) -> BitPlane {
        self.0
    }

    pub fn complement(&self) -> Self {
        Self(self.0.complement())
    }

    /// Fraction of pixels set to 1.
    pub fn white_fraction(&self) -> f64 {
        self.0.count_ones() as f64 / self.0.len() as f64
    }

    /// Renders the mask as an 8-bit image with values 0 and 255.
    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width(), self.height(), |x, y| {
            image::Luma([if self.get(x, y) { 255 } else { 0 }])
        })
    }
}

impl std::ops::Deref for BinaryMask {
    type Target = BitPlane;
    fn deref(&self) -> &BitPlane {
        &self.0
    }
}

/// Validity plane produced by shape transforms; 1 = pixel takes part in metrics.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ShapeMask(BitPlane);

impl ShapeMask {
    pub fn all_valid(width: u32, height: u32) -> Result<Self> {
        BitPlane::ones(width, height).map(Self)
    }

    /// Wraps a plane, rejecting one with no valid pixel.
    pub fn new(plane: BitPlane) -> Result<Self> {
        if plane.count_ones() == 0 {
            return Err(Error::InvalidArgument(
                "shape mask must contain at least one valid pixel".into(),
            ));
        }
        Ok(Self(plane))
    }

    pub fn from_fn(width: u32, height: u32, f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        Self::new(BitPlane::from_fn(width, height, f)?)
    }

    pub fn plane(&self) -> &BitPlane {
        &self.0
    }

    pub fn valid_count(&self) -> u64 {
        self.0.count_ones()
    }
}

impl std::ops::Deref for ShapeMask {
    type Target = BitPlane;
    fn deref(&self) -> &BitPlane {
        &self.0
    }
}

/// Per-pixel manipulation probability, row-major, every value in `[0, 1]`.
#[derive(Clone, PartialEq, Debug)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl ScoreMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} scores for a {width}x{height} map, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "score {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Scores of exactly 0.0 and 1.0 following a binary mask.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        let data = (0..mask.len())
            .map(|i| if mask.get_index(i) { 1.0 } else { 0.0 })
            .collect();
        Self {
            width: mask.width(),
            height: mask.height(),
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// `1 - score` everywhere.
    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// Pixels with `score >= threshold` become 1.
    pub fn binarize(&self, threshold: f64) -> BinaryMask {
        let mut plane = BitPlane::zeros(self.width, self.height).expect("dims checked at construction");
        for (chunk, word) in self.data.chunks(WORD_BITS).zip(plane.words.iter_mut()) {
            let mut w = 0u64;
            for (j, &v) in chunk.iter().enumerate() {
                w |= ((v as f64 >= threshold) as u64) << j;
            }
            *word = w;
        }
        BinaryMask(plane)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_involution_and_keeps_tail_clear() {
        let m = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 3 == 0).unwrap();
        let c = m.complement();
        assert_eq!(c.count_ones() + m.count_ones(), 15);
        assert_eq!(c.complement(), m);
        assert_eq!(c.words()[0] >> 15, 0);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(BinaryMask::zeros(0, 4).is_err());
        assert!(ScoreMap::new(3, 0, vec![]).is_err());
    }

    #[test]
    fn scoremap_rejects_nan_and_out_of_range() {
        assert!(ScoreMap::new(2, 1, vec![0.5, f32::NAN]).is_err());
        assert!(ScoreMap::new(2, 1, vec![0.5, 1.5]).is_err());
        assert!(ScoreMap::new(2, 1, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn empty_shape_mask_rejected() {
        assert!(ShapeMask::new(BitPlane::zeros(2, 2).unwrap()).is_err());
    }

    #[test]
    fn binarize_uses_inclusive_threshold() {
        let s = ScoreMap::new(3, 1, vec![0.49, 0.5, 0.51]).unwrap();
        assert_eq!(s.binarize(0.5).to_bools(), vec![false, true, true]);
    }

    #[test]
    fn from_bools_matches_from_fn() {
        let bools: Vec<bool> = (0..130).map(|i| i % 7 == 0 || i % 5 == 1).collect();
        let a = BitPlane::from_bools(13, 10, &bools).unwrap();
        let b = BitPlane::from_fn(13, 10, |x, y| bools[(y * 13 + x) as usize]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bools(), bools);
    }
}
