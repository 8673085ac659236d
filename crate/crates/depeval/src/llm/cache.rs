//! Response cache: one JSON file per request key.
//!
//! The key is a digest over everything that shapes a request (model name,
//! template id and version, rendered prompt), so a colliding key implies a
//! byte-identical request and a hit can safely replay the stored response.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt cache entry at {path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// What was asked, kept alongside the response for auditability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestMetadata {
    pub model: String,
    pub template_id: String,
    pub template_version: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub raw_response: String,
    /// Unix seconds at store time.
    pub timestamp: u64,
    pub request: RequestMetadata,
}

/// A directory of cache entries, one `<key>.json` file each.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| CacheError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex digest identifying a request. Segments are length-prefixed so
    /// distinct `(model, template, prompt)` splits never collide.
    pub fn key(model: &str, template_id: &str, template_version: &str, prompt: &str) -> String {
        let mut hasher = Sha256::new();
        for segment in [model, template_id, template_version, prompt] {
            hasher.update(segment.len().to_le_bytes());
            hasher.update(segment.as_bytes());
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(digest.len() * 2);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, CacheError> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        let entry =
            serde_json::from_str(&text).map_err(|source| CacheError::Corrupt { path, source })?;
        Ok(Some(entry))
    }

    /// Store an entry atomically: write a temp file, then rename over the
    /// final path, so a crash never leaves a half-written entry.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), CacheError> {
        let path = self.path_for(&entry.key);
        let tmp = self.dir.join(format!(".{}.tmp", entry.key));
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        fs::write(&tmp, body.as_bytes()).map_err(|source| CacheError::Io {
            path: tmp.clone(),
            source,
        })?;
        fs::rename(&tmp, &path).map_err(|source| CacheError::Io { path, source })?;
        Ok(())
    }
}
