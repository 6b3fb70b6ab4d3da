//! Inspectable artifacts and the per-episode artifact store.

use super::{ErrorCode, ToolError};
use crate::canonical;
use crate::geometry::Crs;
use crate::units::Unit;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Table,
    Series,
    Mask,
    Scalar,
    FigureSpec,
}

/// Physical context of an artifact: unit for numeric payloads, CRS and
/// resolution for spatial ones, minimum validity ratio for masked
/// aggregations, day range for temporal ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArtifactMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<Crs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[i64; 2]>,
}

impl ArtifactMeta {
    pub fn unit(unit: Unit) -> ArtifactMeta {
        ArtifactMeta { unit: Some(unit), ..Default::default() }
    }
}

/// The typed, provenance-hashed record of one tool call's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    #[serde(rename = "type")]
    pub kind: ArtifactKind,
    pub payload: Value,
    pub meta: ArtifactMeta,
    /// SHA-256 over (tool, version, world id, canonical args), 64 hex chars.
    pub prov: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub seq: u32,
    pub tool: String,
    pub prov: String,
}

/// Append-only artifact store for one episode. Optionally mirrored to a
/// directory as one canonical-JSON file per artifact plus an `index.json`.
#[derive(Debug, Default)]
pub struct ArtifactStore {
    dir: Option<PathBuf>,
    entries: Vec<StoreEntry>,
    artifacts: Vec<Artifact>,
}

impl ArtifactStore {
    pub fn in_memory() -> ArtifactStore {
        ArtifactStore::default()
    }

    pub fn at_dir(dir: &Path) -> Result<ArtifactStore, ToolError> {
        fs::create_dir_all(dir).map_err(|e| {
            ToolError::new(ErrorCode::IoError, format!("cannot create {}: {e}", dir.display()))
        })?;
        Ok(ArtifactStore { dir: Some(dir.to_path_buf()), ..Default::default() })
    }

    pub fn append(&mut self, tool: &str, artifact: Artifact) -> Result<u32, ToolError> {
        let seq = self.entries.len() as u32;
        if let Some(dir) = &self.dir {
            let name = format!("{seq:04}_{}.json", &artifact.prov[..12]);
            let path = dir.join(name);
            fs::write(&path, canonical::to_string(&artifact)).map_err(|e| {
                ToolError::new(ErrorCode::IoError, format!("cannot write {}: {e}", path.display()))
            })?;
        }
        self.entries.push(StoreEntry { seq, tool: tool.to_string(), prov: artifact.prov.clone() });
        self.artifacts.push(artifact);
        Ok(seq)
    }

    /// Write (or rewrite) the store index.
    pub fn write_index(&self) -> Result<(), ToolError> {
        if let Some(dir) = &self.dir {
            let path = dir.join("index.json");
            let doc = serde_json::json!({ "artifacts": self.entries });
            fs::write(&path, canonical::to_string(&doc)).map_err(|e| {
                ToolError::new(ErrorCode::IoError, format!("cannot write {}: {e}", path.display()))
            })?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.artifacts
    }

    /// Whether a file name follows the store pattern `<seq>_<prov12>.json`.
    fn is_store_file(name: &str) -> bool {
        let Some(stem) = name.strip_suffix(".json") else { return false };
        let Some((seq, prov)) = stem.split_once('_') else { return false };
        !seq.is_empty()
            && seq.bytes().all(|b| b.is_ascii_digit())
            && prov.len() == 12
            && prov.bytes().all(|b| b.is_ascii_hexdigit())
    }

    /// Load every artifact file of a previously written store, in sequence
    /// order. Other files in the directory (index, traces) are ignored.
    pub fn load_dir(dir: &Path) -> Result<Vec<Artifact>, ToolError> {
        let mut named: Vec<(String, PathBuf)> = fs::read_dir(dir)
            .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|entry| {
                let path = entry.ok()?.path();
                let name = path.file_name()?.to_string_lossy().into_owned();
                Self::is_store_file(&name).then_some((name, path))
            })
            .collect();
        named.sort();
        let mut out = Vec::with_capacity(named.len());
        for (_, path) in named {
            let text = fs::read_to_string(&path).map_err(|e| {
                ToolError::new(ErrorCode::IoError, format!("cannot read {}: {e}", path.display()))
            })?;
            let artifact: Artifact = serde_json::from_str(&text).map_err(|e| {
                ToolError::new(ErrorCode::ParseError, format!("{}: {e}", path.display()))
            })?;
            out.push(artifact);
        }
        Ok(out)
    }
}
