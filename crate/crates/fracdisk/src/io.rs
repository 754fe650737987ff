//! Evolution manifests and the on-disk cache of steady reference solutions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{steady_field, SteadyStudyConfig};
use crate::disk_basis::SpectralField;
use crate::error::Result;

/// Index of the snapshot files written for one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionManifest {
    /// Final time.
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Number of steps.
    #[serde(rename = "N")]
    pub n_steps: usize,
    /// Time step.
    pub dt: f64,
    /// Snapshot times.
    pub times: Vec<f64>,
    /// Snapshot file names, parallel to `times`.
    #[serde(default)]
    pub files: Vec<String>,
}

impl EvolutionManifest {
    /// Serialises the manifest.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a manifest.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Hex SHA-256 of the parts of a study configuration that determine the reference.
pub fn reference_key(config: &SteadyStudyConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        alpha: f64,
        k1: f64,
        k2: f64,
        source: &'a crate::sources::SourceSpec,
        reference_cap: usize,
    }
    let doc = serde_json::to_string(&Key {
        alpha: config.params.alpha(),
        k1: config.params.k1(),
        k2: config.params.k2(),
        source: &config.source,
        reference_cap: config.reference_cap,
    })?;
    let digest = Sha256::digest(doc.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

/// Path of the cached reference inside `dir`.
pub fn reference_path(dir: &Path, config: &SteadyStudyConfig) -> Result<PathBuf> {
    Ok(dir.join(format!("reference-{}.json", reference_key(config)?)))
}

/// Loads the reference from `dir`, computing and storing it on a miss or on an unreadable file.
pub fn cached_reference(dir: &Path, config: &SteadyStudyConfig) -> Result<SpectralField> {
    let path = reference_path(dir, config)?;
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(field) = SpectralField::from_json(&text) {
            return Ok(field);
        }
    }
    let field = steady_field(config, config.reference_cap)?;
    fs::create_dir_all(dir)?;
    fs::write(&path, field.to_json()?)?;
    Ok(field)
}
