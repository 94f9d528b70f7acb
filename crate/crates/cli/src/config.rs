//! Layered option resolution: command line, then the JSON config file, then
//! built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Flat JSON object of option values keyed by flag name (`kebab-case` or
/// `snake_case`). Keys are consumed as they are read; leftovers are rejected.
pub struct Layer {
    origin: Option<PathBuf>,
    values: Map<String, Value>,
}

impl Layer {
    pub fn empty() -> Self {
        Self {
            origin: None,
            values: Map::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))?;
        let Value::Object(raw) = value else {
            return Err(CliError::Usage(format!(
                "config {} must be a JSON object",
                path.display()
            )));
        };
        let values = raw.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect();
        Ok(Self {
            origin: Some(path.to_path_buf()),
            values,
        })
    }

    pub fn from_option(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::empty()), Self::load)
    }

    /// The command-line value if given, else the config value for `key`.
    pub fn pick<T: DeserializeOwned>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>, CliError> {
        let from_file = self.values.remove(&key.replace('-', "_"));
        if cli.is_some() {
            return Ok(cli);
        }
        from_file
            .map(|v| {
                serde_json::from_value(v)
                    .map_err(|e| CliError::Usage(format!("config key `{key}` in {}: {e}", self.origin_name())))
            })
            .transpose()
    }

    pub fn pick_or<T: DeserializeOwned>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.pick(key, cli)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&mut self, key: &str, cli: Option<T>) -> Result<T, CliError> {
        self.pick(key, cli)?
            .ok_or_else(|| CliError::Usage(format!("missing required option --{}", key.replace('_', "-"))))
    }

    /// Fails on config keys that no option consumed.
    pub fn finish(self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
        Err(CliError::Usage(format!(
            "unknown key(s) in {}: {}",
            self.origin_name(),
            keys.join(", ")
        )))
    }

    fn origin_name(&self) -> String {
        self.origin
            .as_deref()
            .map_or_else(|| "config".to_string(), |p| p.display().to_string())
    }
}

/// `WIDTHxHEIGHT`, e.g. `256x256`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims(pub u32, pub u32);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<u32>().ok().filter(|&n| n > 0);
        match (parse(w), parse(h)) {
            (Some(w), Some(h)) => Ok(Dims(w, h)),
            _ => Err(format!("expected positive WIDTHxHEIGHT, got {s:?}")),
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

impl Serialize for Dims {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dims {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
