//! Image, mask and score-map decoding into canonical in-memory planes.

use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use super::plane::{BinaryMask, ScoreMap};
use crate::error::{Error, Result};

pub const DEFAULT_MASK_THRESHOLD: f64 = 0.5;

/// Extension of raw little-endian f32 score files.
pub const RAW_SCORE_EXTENSION: &str = "f32";

/// Integer BT.601 luma, rounded to nearest.
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

#[inline]
fn luma_bt601_16(r: u16, g: u16, b: u16) -> u16 {
    ((299 * r as u64 + 587 * g as u64 + 114 * b as u64 + 500) / 1000) as u16
}

fn decode_err(path: &Path, message: impl ToString) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn open_image(path: &Path) -> Result<DynamicImage> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| decode_err(path, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(decode_err(path, "image has a zero dimension"));
    }
    Ok(img)
}

/// Collapses any 8-bit image to a grayscale plane. Color uses BT.601 integer
/// weights; alpha is ignored.
pub fn to_luma8(img: &DynamicImage) -> GrayImage {
    match img {
        DynamicImage::ImageLuma8(g) => g.clone(),
        DynamicImage::ImageLumaA8(g) => {
            GrayImage::from_fn(g.width(), g.height(), |x, y| image::Luma([g.get_pixel(x, y)[0]]))
        }
        other => {
            let rgb = other.to_rgb8();
            GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
                let p = rgb.get_pixel(x, y);
                image::Luma([luma_bt601(p[0], p[1], p[2])])
            })
        }
    }
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(open_image(path)?.to_rgb8())
}

pub fn load_luma(path: &Path) -> Result<GrayImage> {
    Ok(to_luma8(&open_image(path)?))
}

/// Binarizes a grayscale plane: bit set iff `luma / 255 >= threshold`.
pub fn binarize_luma(gray: &GrayImage, threshold: f64) -> Result<BinaryMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "binarization threshold must lie in (0, 1), got {threshold}"
        )));
    }
    BinaryMask::from_fn(gray.width(), gray.height(), |x, y| {
        gray.get_pixel(x, y)[0] as f64 / 255.0 >= threshold
    })
}

/// Decodes a PNG or JPEG mask; RGB is collapsed to luma before thresholding.
pub fn decode_mask(path: &Path, binarize_threshold: f64) -> Result<BinaryMask> {
    let gray = load_luma(path)?;
    binarize_luma(&gray, binarize_threshold)
}

/// Decodes a score map from an 8/16-bit image or a raw `.f32` file.
///
/// Integer samples are divided by the type maximum.
pub fn decode_scoremap(path: &Path) -> Result<ScoreMap> {
    let is_raw = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case(RAW_SCORE_EXTENSION));
    if is_raw {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        return parse_raw_scores(&bytes).map_err(|e| match e {
            Error::InvalidArgument(m) => decode_err(path, m),
            other => other,
        });
    }
    let img = open_image(path)?;
    let (w, h) = (img.width(), img.height());
    let data: Vec<f32> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let rgb = img.to_rgb16();
            rgb.pixels()
                .map(|p| luma_bt601_16(p[0], p[1], p[2]) as f32 / 65535.0)
                .collect()
        }
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => {
            return Err(decode_err(
                path,
                "floating-point images are not supported; use a raw .f32 file",
            ))
        }
        other => to_luma8(other).as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
    };
    ScoreMap::new(w, h, data).map_err(|e| decode_err(path, e))
}

/// Parses the raw score layout: u32 width, u32 height, then width*height f32,
/// all little-endian, row-major.
pub fn parse_raw_scores(bytes: &[u8]) -> Result<ScoreMap> {
    if bytes.len() < 8 {
        return Err(Error::InvalidArgument("raw score file shorter than its header".into()));
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let n = width as usize * height as usize;
    let body = &bytes[8..];
    if body.len() != n * 4 {
        return Err(Error::InvalidArgument(format!(
            "raw score file declares {width}x{height} but carries {} bytes of data",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScoreMap::new(width, height, data)
}

pub fn encode_raw_scores(map: &ScoreMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + map.data().len() * 4);
    out.extend_from_slice(&map.width().to_le_bytes());
    out.extend_from_slice(&map.height().to_le_bytes());
    for v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_raw_scores(map: &ScoreMap, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_raw_scores(map))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes a mask as an 8-bit PNG with values 0/255.
pub fn write_mask_png(mask: &BinaryMask, path: &Path) -> Result<()> {
    mask.to_luma8()
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Encode(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_gray(dir: &Path, name: &str, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) -> std::path::PathBuf {
        let p = dir.join(name);
        GrayImage::from_fn(w, h, |x, y| image::Luma([f(x, y)]))
            .save(&p)
            .unwrap();
        p
    }

    #[test]
    fn white_and_black_masks() {
        let d = tempfile::tempdir().unwrap();
        let white = write_gray(d.path(), "w.png", 4, 4, |_, _| 255);
        let black = write_gray(d.path(), "b.png", 4, 4, |_, _| 0);
        assert_eq!(decode_mask(&white, 0.5).unwrap().count_ones(), 16);
        assert_eq!(decode_mask(&black, 0.5).unwrap().count_ones(), 0);
    }

    #[test]
    fn checkerboard_matches_pixel_loop() {
        let d = tempfile::tempdir().unwrap();
        let f = |x: u32, y: u32| if (x + y) % 2 == 0 { 255 } else { 0 };
        let p = write_gray(d.path(), "c.png", 4, 4, f);
        let m = decode_mask(&p, 0.5).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(m.get(x, y), f(x, y) as f64 / 255.0 >= 0.5);
            }
        }
        assert_eq!(m.count_ones(), 8);
    }

    #[test]
    fn rgb_mask_collapses_to_luma() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("rgb.png");
        // pure red has luma 76, pure green 150
        RgbImage::from_fn(2, 1, |x, _| {
            if x == 0 {
                image::Rgb([255, 0, 0])
            } else {
                image::Rgb([0, 255, 0])
            }
        })
        .save(&p)
        .unwrap();
        assert_eq!(luma_bt601(255, 0, 0), 76);
        assert_eq!(luma_bt601(0, 255, 0), 150);
        let m = decode_mask(&p, 0.5).unwrap();
        assert_eq!(m.to_bools(), vec![false, true]);
    }

    #[test]
    fn binary_png_decode_is_idempotent() {
        let d = tempfile::tempdir().unwrap();
        let m = BinaryMask::from_fn(9, 7, |x, y| (x * y) % 4 == 1).unwrap();
        let p = d.path().join("m.png");
        write_mask_png(&m, &p).unwrap();
        let once = decode_mask(&p, 0.5).unwrap();
        write_mask_png(&once, &p).unwrap();
        assert_eq!(decode_mask(&p, 0.5).unwrap(), m);
    }

    #[test]
    fn scoremap_scaling() {
        let d = tempfile::tempdir().unwrap();
        let p = write_gray(d.path(), "s.png", 3, 1, |x, _| [0u8, 128, 255][x as usize]);
        let s = decode_scoremap(&p).unwrap();
        assert_eq!(s.data()[0], 0.0);
        assert!((s.data()[1] as f64 - 128.0 / 255.0).abs() < 1e-7);
        assert_eq!(s.data()[2], 1.0);

        let p16 = d.path().join("s16.png");
        image::ImageBuffer::<image::Luma<u16>, _>::from_fn(2, 1, |x, _| image::Luma([if x == 0 { 0 } else { 65535 }]))
            .save(&p16)
            .unwrap();
        assert_eq!(decode_scoremap(&p16).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn raw_scores_roundtrip_and_range_check() {
        let d = tempfile::tempdir().unwrap();
        let m = ScoreMap::new(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let p = d.path().join("x.f32");
        write_raw_scores(&m, &p).unwrap();
        assert_eq!(decode_scoremap(&p).unwrap(), m);

        let mut bytes = encode_raw_scores(&m);
        bytes[8..12].copy_from_slice(&1.5f32.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(decode_scoremap(&p), Err(Error::Decode { .. })));

        std::fs::write(&p, &bytes[..10]).unwrap();
        assert!(decode_scoremap(&p).is_err());
    }

    #[test]
    fn undecodable_file_errors() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("junk.png");
        std::fs::write(&p, b"not an image").unwrap();
        assert!(matches!(decode_mask(&p, 0.5), Err(Error::Decode { .. })));
    }
}
