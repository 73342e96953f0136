//! Binary model checkpoints with a TOML sidecar manifest.
//!
//! Header (all integers little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 8     | magic `TOMONET\0` |
//! | 4     | format version (1) |
//! | 4     | architecture (0 transformer, 1 cnn2, 2 cnn4) |
//! | 4 × 7 | d, kernels, width, heads, head_dim, cnn_channels, cnn_width |
//! | 8     | parameter count P |
//!
//! followed by P little-endian f64 values in the block order of
//! [`ModelSpec::blocks`](super::ModelSpec::blocks).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{Architecture, ModelSpec};
use super::train::{History, TrainConfig};
use super::Model;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TOMONET\0";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 8 + 4 * 9 + 8;

// generous bounds that keep the size arithmetic far from overflow
const MAX_D: usize = 64;
const MAX_FIELD: usize = 1 << 16;

pub fn encode(model: &Model) -> Vec<u8> {
    let s = model.spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&s.arch.code().to_le_bytes());
    for f in [
        s.d,
        s.kernels,
        s.width,
        s.heads,
        s.head_dim,
        s.cnn_channels,
        s.cnn_width,
    ] {
        out.extend_from_slice(&(f as u32).to_le_bytes());
    }
    out.extend_from_slice(&(model.param_count() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "checkpoint of {} bytes is truncated",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = read_u32(bytes, 8);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let arch = Architecture::from_code(read_u32(bytes, 12))?;
    let mut fields = [0usize; 7];
    for (i, f) in fields.iter_mut().enumerate() {
        *f = read_u32(bytes, 16 + 4 * i) as usize;
    }
    let [d, kernels, width, heads, head_dim, cnn_channels, cnn_width] = fields;
    if d > MAX_D || fields[1..].iter().any(|&f| f > MAX_FIELD) {
        return Err(Error::Format("checkpoint dimensions out of range".into()));
    }
    let spec = ModelSpec {
        arch,
        d,
        kernels,
        width,
        heads,
        head_dim,
        cnn_channels,
        cnn_width,
    };
    spec.validate()
        .map_err(|e| Error::Format(format!("invalid model header: {e}")))?;
    let count = u64::from_le_bytes(bytes[44..52].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if count.checked_mul(8) != Some(payload.len() as u64) {
        return Err(Error::Format(format!(
            "payload of {} bytes does not hold {count} parameters",
            payload.len()
        )));
    }
    if count as usize != spec.param_count() {
        return Err(Error::Format(format!(
            "header announces {count} parameters, architecture needs {}",
            spec.param_count()
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Model::new(spec, params).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

/// Human-readable companion of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub model: ModelSpec,
    pub param_count: usize,
    pub blocks: Vec<BlockEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<HistorySummary>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub initial_val_loss: f64,
    pub final_train_loss: f64,
}

impl From<&History> for HistorySummary {
    fn from(h: &History) -> Self {
        Self {
            epochs: h.train_loss.len(),
            best_epoch: h.best_epoch,
            best_val_loss: h.best_val_loss,
            initial_val_loss: h.initial_val_loss(),
            final_train_loss: h.train_loss.last().copied().unwrap_or(f64::NAN),
        }
    }
}

impl Manifest {
    pub fn for_model(model: &Model) -> Self {
        let spec = *model.spec();
        Self {
            format_version: FORMAT_VERSION,
            model: spec,
            param_count: model.param_count(),
            blocks: spec
                .blocks()
                .into_iter()
                .map(|b| BlockEntry {
                    name: b.name,
                    shape: b.shape,
                    offset: b.offset,
                })
                .collect(),
            train: None,
            history: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("toml")
}

/// Writes `path` and its `.toml` manifest.
pub fn save(model: &Model, path: &Path, manifest: &Manifest) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, encode(model))?;
    std::fs::write(manifest_path(path), manifest.to_toml()?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::MissingModel(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}
