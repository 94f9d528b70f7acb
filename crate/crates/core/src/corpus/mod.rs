//! Dataset manifests and decoding of images, masks and score maps.

mod decode;
mod manifest;
mod plane;
mod shape;

pub use decode::{
    binarize_luma, decode_mask, decode_scoremap, encode_raw_scores, load_luma, load_rgb, luma_bt601, open_image,
    parse_raw_scores, to_luma8, write_mask_png, write_raw_scores, DEFAULT_MASK_THRESHOLD, RAW_SCORE_EXTENSION,
};
pub use manifest::{load_manifest, parse_manifest, Label, Manifest, SampleRecord};
pub use plane::{BinaryMask, BitPlane, ScoreMap, ShapeMask};
pub use shape::{apply_shape_transform, Reshape, ShapePolicy};

pub(crate) use shape::bilinear_resize;
