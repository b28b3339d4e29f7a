//! Per-stage manifests. They record input and output digests plus the seed and
//! parameters, and deliberately omit timestamps, thread counts and directories,
//! so an identical rerun produces an identical manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::digest::file_sha256;
use crate::error::Result;
use crate::formats::{read_json, write_json};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub role: String,
    /// File name only.
    pub file: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        Ok(Self {
            role: role.to_string(),
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: file_sha256(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

impl StageManifest {
    pub fn new(stage: &str, seed: Option<u64>) -> Self {
        Self {
            stage: stage.to_string(),
            version: VERSION.to_string(),
            seed,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }

    pub fn input(mut self, role: &str, path: &Path) -> Result<Self> {
        self.inputs.push(Artifact::of(role, path)?);
        Ok(self)
    }

    pub fn output(mut self, role: &str, path: &Path) -> Result<Self> {
        self.outputs.push(Artifact::of(role, path)?);
        Ok(self)
    }

    pub fn digest_of(&self, role: &str) -> Option<&str> {
        self.inputs.iter().chain(&self.outputs).find(|a| a.role == role).map(|a| a.sha256.as_str())
    }

    /// Write next to `primary` as `<primary>.manifest.json`; returns the path.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let path = manifest_path(primary);
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn read_manifest(primary: &Path) -> Result<StageManifest> {
    read_json(&manifest_path(primary))
}
