//! Model persistence.
//!
//! Models are written as a self-describing JSON envelope:
//!
//! ```json
//! {
//!   "checksum": "<sha-256 of the canonical model JSON>",
//!   "format_version": "slu-model/1",
//!   "model": { "task": "speech_act" | "semantic", ... }
//! }
//! ```
//!
//! The payload is canonical — object keys are emitted in sorted order and
//! reals use shortest round-trip rendering — so identical models produce
//! byte-identical files. Writes go through a temporary file and an atomic
//! rename; readers never observe partial output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{SemanticModel, SpeechActModel};

pub const MODEL_FORMAT_VERSION: &str = "slu-model/1";

/// Either kind of trained model, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum ModelFile {
    SpeechAct(SpeechActModel),
    Semantic(SemanticModel),
}

fn sha256_hex(data: &str) -> String {
    let digest = Sha256::digest(data.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders the canonical envelope text.
pub fn model_to_string(model: &ModelFile) -> Result<String> {
    let payload = serde_json::to_value(model)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize model: {e}")))?;
    // serde_json's maps are BTree-backed, so a Value round-trip sorts keys.
    let canonical = serde_json::to_string(&payload)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize model: {e}")))?;
    let envelope = serde_json::json!({
        "checksum": sha256_hex(&canonical),
        "format_version": MODEL_FORMAT_VERSION,
        "model": payload,
    });
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize model: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Parses and verifies an envelope produced by [`model_to_string`].
pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let envelope: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(Path::new("<model>"), &e))?;
    let version = envelope
        .get("format_version")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::CorruptModel("missing format_version field".to_string()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            supported: MODEL_FORMAT_VERSION.to_string(),
        });
    }
    let checksum = envelope
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::CorruptModel("missing checksum field".to_string()))?;
    let payload = envelope
        .get("model")
        .ok_or_else(|| Error::CorruptModel("missing model field".to_string()))?;
    let canonical = serde_json::to_string(payload)
        .map_err(|e| Error::CorruptModel(format!("cannot re-serialize payload: {e}")))?;
    if sha256_hex(&canonical) != checksum {
        return Err(Error::CorruptModel(
            "checksum does not match the model payload".to_string(),
        ));
    }
    serde_json::from_value(payload.clone())
        .map_err(|e| Error::CorruptModel(format!("invalid model structure: {e}")))
}

/// Saves a model to `path`.
pub fn save_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(model)?;
    write_atomic(path, text.as_bytes())
}

/// Loads a model from `path`, verifying version and checksum.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text).map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
            ..
        } => Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })
}

/// Writes `contents` to `path` via a sibling temporary file and a rename,
/// so the destination is never left partially written.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("cannot write to `{}`", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp_path = path.with_file_name(tmp_name);
    fs::write(&tmp_path, contents).map_err(|e| Error::io(&tmp_path, e))?;
    fs::rename(&tmp_path, path).map_err(|e| Error::io(path, e))
}
