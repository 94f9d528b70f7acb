//! Shape transforms (pad, crop, resize) that also emit the validity plane.

use serde::{Deserialize, Serialize};

use super::plane::{BinaryMask, ScoreMap, ShapeMask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapePolicy {
    /// Zero-pad to `width x height`, source anchored top-left.
    PadTo { width: u32, height: u32 },
    /// Crop a centered `width x height` window.
    CenterCrop { width: u32, height: u32 },
    /// Resample to `width x height`.
    Resize { width: u32, height: u32 },
}

impl ShapePolicy {
    pub fn target(&self) -> (u32, u32) {
        match *self {
            ShapePolicy::PadTo { width, height }
            | ShapePolicy::CenterCrop { width, height }
            | ShapePolicy::Resize { width, height } => (width, height),
        }
    }
}

/// Planes that shape transforms apply to.
pub trait Reshape: Sized {
    fn dims(&self) -> (u32, u32);
    fn pad_to(&self, width: u32, height: u32) -> Result<Self>;
    fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Self>;
    fn resize(&self, width: u32, height: u32) -> Result<Self>;
}

impl Reshape for BinaryMask {
    fn dims(&self) -> (u32, u32) {
        self.plane().dims()
    }

    fn pad_to(&self, width: u32, height: u32) -> Result<Self> {
        let (sw, sh) = self.dims();
        BinaryMask::from_fn(width, height, |x, y| x < sw && y < sh && self.get(x, y))
    }

    fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Self> {
        BinaryMask::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Nearest neighbour: destination pixel `x` samples source `floor(x * sw / dw)`.
    fn resize(&self, width: u32, height: u32) -> Result<Self> {
        let (sw, sh) = self.dims();
        BinaryMask::from_fn(width, height, |x, y| {
            let sx = (x as u64 * sw as u64 / width as u64) as u32;
            let sy = (y as u64 * sh as u64 / height as u64) as u32;
            self.get(sx, sy)
        })
    }
}

impl Reshape for ScoreMap {
    fn dims(&self) -> (u32, u32) {
        ScoreMap::dims(self)
    }

    fn pad_to(&self, width: u32, height: u32) -> Result<Self> {
        let (sw, sh) = self.dims();
        let mut data = vec![0.0f32; width as usize * height as usize];
        for y in 0..sh {
            let src = &self.data()[(y * sw) as usize..((y + 1) * sw) as usize];
            let start = y as usize * width as usize;
            data[start..start + sw as usize].copy_from_slice(src);
        }
        ScoreMap::new(width, height, data)
    }

    fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(self.get(x0 + x, y0 + y));
            }
        }
        ScoreMap::new(width, height, data)
    }

    fn resize(&self, width: u32, height: u32) -> Result<Self> {
        let (sw, sh) = self.dims();
        let src: Vec<f64> = self.data().iter().map(|&v| v as f64).collect();
        let data = bilinear_resize(&src, sw, sh, width, height)
            .into_iter()
            .map(|v| (v as f32).clamp(0.0, 1.0))
            .collect();
        ScoreMap::new(width, height, data)
    }
}

/// Bilinear resampling with half-pixel centres and edge clamping.
pub(crate) fn bilinear_resize(src: &[f64], sw: u32, sh: u32, dw: u32, dh: u32) -> Vec<f64> {
    let taps = |d: u32, s: u32| -> Vec<(usize, usize, f64)> {
        (0..d)
            .map(|i| {
                let pos = ((i as f64 + 0.5) * s as f64 / d as f64 - 0.5).clamp(0.0, (s - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(s as usize - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let xs = taps(dw, sw);
    let ys = taps(dh, sh);
    let sw = sw as usize;
    let mut out = Vec::with_capacity(dw as usize * dh as usize);
    for &(y0, y1, fy) in &ys {
        let r0 = &src[y0 * sw..(y0 + 1) * sw];
        let r1 = &src[y1 * sw..(y1 + 1) * sw];
        for &(x0, x1, fx) in &xs {
            let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    out
}

/// Applies `policy` and returns the transformed plane with its validity mask.
///
/// Padding marks the added area invalid; cropping and resizing leave every
/// pixel valid.
pub fn apply_shape_transform<P: Reshape>(plane: &P, policy: ShapePolicy) -> Result<(P, ShapeMask)> {
    let (tw, th) = policy.target();
    if tw == 0 || th == 0 {
        return Err(Error::InvalidArgument(format!(
            "shape target must be positive, got {tw}x{th}"
        )));
    }
    let (sw, sh) = plane.dims();
    match policy {
        ShapePolicy::PadTo { .. } => {
            if tw < sw || th < sh {
                return Err(Error::InvalidArgument(format!(
                    "cannot pad {sw}x{sh} down to {tw}x{th}"
                )));
            }
            let shape = ShapeMask::from_fn(tw, th, |x, y| x < sw && y < sh)?;
            Ok((plane.pad_to(tw, th)?, shape))
        }
        ShapePolicy::CenterCrop { .. } => {
            if tw > sw || th > sh {
                return Err(Error::InvalidArgument(format!(
                    "crop {tw}x{th} is larger than source {sw}x{sh}"
                )));
            }
            let out = plane.crop((sw - tw) / 2, (sh - th) / 2, tw, th)?;
            Ok((out, ShapeMask::all_valid(tw, th)?))
        }
        ShapePolicy::Resize { .. } => Ok((plane.resize(tw, th)?, ShapeMask::all_valid(tw, th)?)),
    }
}
