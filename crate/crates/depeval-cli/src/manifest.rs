//! Per-invocation run manifest: what went in, what configuration applied,
//! what came out.

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written as `run.json` next to every command's outputs. Re-running a
/// command offline with identical input and config digests reproduces the
/// outputs byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub config_digest: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: Vec<InputDigest>,
        config: &Value,
        outputs: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            config_digest: sha256_hex(config.to_string().as_bytes()),
            outputs,
        }
    }

    /// Atomic write: temp file then rename, so a crash cannot leave a
    /// truncated manifest behind.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let body = format!("{}\n", serde_json::to_string_pretty(self)?);
        let tmp = dir.join(".run.json.tmp");
        let path = dir.join("run.json");
        fs::write(&tmp, body).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("renaming to {}", path.display()))?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(digest.len() * 2);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

pub fn digest_input(path: &Path, contents: &str) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    }
}
