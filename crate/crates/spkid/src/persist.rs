//! Model files.
//!
//! A model file is a JSON envelope
//! `{"format": .., "version": .., "sha256": .., "body": {..}}` where the
//! checksum covers the exact bytes of `body`. Floats are written with
//! round-trip precision, so loading reproduces every parameter bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use spkid_core::SpeakerModel;

use crate::error::{Error, Result};
use crate::pipeline::TrainingConfig;

pub const FORMAT_NAME: &str = "spkid-models";
pub const FORMAT_VERSION: u32 = 1;

/// Trained models with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub training: TrainingConfig,
    /// Fusion weight picked by an alpha sweep, if one was stored.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub models: Vec<SpeakerModel>,
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    sha256: String,
    body: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    format: String,
    version: u32,
    sha256: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_string(set: &ModelSet) -> Result<String> {
    let body = serde_json::to_string(set)?;
    let raw = RawValue::from_string(body)?;
    let env = EnvelopeOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        sha256: digest(raw.get().as_bytes()),
        body: &raw,
    };
    Ok(serde_json::to_string(&env)?)
}

pub fn from_str(text: &str) -> Result<ModelSet> {
    let env: EnvelopeIn = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            Error::Truncated
        } else {
            Error::Json(e)
        }
    })?;
    if env.format != FORMAT_NAME {
        return Err(Error::WrongFormat {
            expected: FORMAT_NAME,
        });
    }
    if env.version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: env.version,
            supported: FORMAT_VERSION,
        });
    }
    let computed = digest(env.body.get().as_bytes());
    if computed != env.sha256 {
        return Err(Error::Checksum {
            recorded: env.sha256,
            computed,
        });
    }
    Ok(serde_json::from_str(env.body.get())?)
}

pub fn save_models(path: &Path, set: &ModelSet) -> Result<()> {
    let text = to_string(set)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_models(path: &Path) -> Result<ModelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
