//! Dataset manifests: one JSON file listing every sample of a dataset.
//!
//! ```json
//! {"dataset": "casia", "samples": [
//!   {"id": "a", "image": "images/a.jpg", "mask": null, "label": 0},
//!   {"id": "b", "image": "images/b.jpg", "mask": "masks/b.png", "label": 1}
//! ]}
//! ```
//!
//! Paths are relative to the directory holding the manifest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Authentic,
    Manipulated,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Authentic => 0,
            Label::Manipulated => 1,
        }
    }

    pub fn is_manipulated(self) -> bool {
        self == Label::Manipulated
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Label::Authentic),
            1 => Ok(Label::Manipulated),
            other => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    #[serde(rename = "image")]
    pub image_path: PathBuf,
    #[serde(rename = "mask", default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "dataset")]
    pub dataset_name: String,
    pub samples: Vec<SampleRecord>,
    /// Directory the relative paths resolve against.
    #[serde(skip)]
    pub root: PathBuf,
}

// Every field optional so that missing fields surface as validation errors
// alongside the other violations instead of aborting the parse.
#[derive(Deserialize)]
struct RawManifest {
    dataset: Option<String>,
    samples: Option<Vec<RawSample>>,
}

#[derive(Deserialize)]
struct RawSample {
    id: Option<String>,
    image: Option<PathBuf>,
    #[serde(default)]
    mask: Option<PathBuf>,
    label: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new(dataset_name: impl Into<String>, samples: Vec<SampleRecord>, root: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            dataset_name: dataset_name.into(),
            samples,
            root: root.into(),
        };
        let problems = m.violations();
        if problems.is_empty() {
            Ok(m)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.root.join(relative)
    }

    pub fn manipulated(&self) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(|s| s.label.is_manipulated())
    }

    /// Lists every invariant violation; empty when the manifest is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for (i, s) in self.samples.iter().enumerate() {
            if let Some(p) = id_problem(&s.id) {
                problems.push(format!("sample {i}: {p}"));
            }
            if !seen.insert(s.id.as_str()) {
                problems.push(format!("sample {i}: duplicate id {:?}", s.id));
            }
            match (s.label, &s.mask_path) {
                (Label::Manipulated, None) => problems.push(format!("sample {:?}: label 1 requires a mask path", s.id)),
                (Label::Authentic, Some(_)) => {
                    problems.push(format!("sample {:?}: label 0 must not have a mask path", s.id))
                }
                _ => {}
            }
        }
        problems
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn id_problem(id: &str) -> Option<String> {
    if id.is_empty() {
        Some("id must not be empty".into())
    } else if id.contains(['/', '\\']) || id == "." || id == ".." {
        Some(format!("id {id:?} must be usable as a file name"))
    } else {
        None
    }
}

/// Parses and validates manifest text; `root` is where relative paths resolve.
pub fn parse_manifest(text: &str, root: &Path, origin: &Path) -> Result<Manifest> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    let mut problems = Vec::new();
    let dataset = raw.dataset.unwrap_or_else(|| {
        problems.push("missing field \"dataset\"".to_string());
        String::new()
    });
    let Some(raw_samples) = raw.samples else {
        problems.push("missing field \"samples\"".to_string());
        return Err(Error::Validation(problems));
    };
    let mut samples = Vec::with_capacity(raw_samples.len());
    for (i, r) in raw_samples.into_iter().enumerate() {
        let mut missing = |field: &str| problems.push(format!("sample {i}: missing field {field:?}"));
        let id = r.id;
        let image = r.image;
        if id.is_none() {
            missing("id");
        }
        if image.is_none() {
            missing("image");
        }
        let label = match r.label {
            None => {
                missing("label");
                None
            }
            Some(v) => match v.as_u64() {
                Some(0) => Some(Label::Authentic),
                Some(1) => Some(Label::Manipulated),
                _ => {
                    problems.push(format!("sample {i}: label must be 0 or 1, got {v}"));
                    None
                }
            },
        };
        if let (Some(id), Some(image_path), Some(label)) = (id, image, label) {
            samples.push(SampleRecord {
                id,
                image_path,
                mask_path: r.mask,
                label,
            });
        }
    }
    let manifest = Manifest {
        dataset_name: dataset,
        samples,
        root: root.to_path_buf(),
    };
    problems.extend(manifest.violations());
    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Reads and validates a manifest file. Sample order is preserved.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &root, path)
}
