//! Store persistence: the canonical snapshot text on disk.
//!
//! A missing store file reads as an empty store so that the very first
//! `ingest` or `gen` can create it; any other read or decode problem is an
//! error. Saves go through a sibling temp file plus rename, so a crashed
//! writer never leaves a half-written store behind.

use std::fs;
use std::path::Path;

use ckn_core::{decode_snapshot, encode_snapshot, GraphStore};

use crate::error::{Error, Result};

/// Read a store from `path`; a nonexistent file yields an empty store.
pub fn load_store(path: &Path) -> Result<GraphStore> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(GraphStore::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    decode_snapshot(&text).map_err(Error::from)
}

/// Atomically write the canonical snapshot of `store` to `path`.
pub fn save_store(path: &Path, store: &GraphStore) -> Result<()> {
    let bytes = encode_snapshot(store);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::persist(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::persist(path, e))
}
