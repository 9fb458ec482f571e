//! Content-addressed response cache: one file per request digest, file name =
//! digest, content = raw backend payload. Writes are atomic per key.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::digest::is_digest;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    /// Open (creating if needed) a cache directory.
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, digest: &str) -> Result<PathBuf> {
        if !is_digest(digest) {
            return Err(Error::InvalidRequest {
                detail: format!("cache key is not a hex digest: {digest:?}"),
            });
        }
        Ok(self.dir.join(digest))
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.path_for(digest).map(|p| p.is_file()).unwrap_or(false)
    }

    pub fn get(&self, digest: &str) -> Result<Option<String>> {
        let path = self.path_for(digest)?;
        match fs::read_to_string(&path) {
            Ok(payload) => Ok(Some(payload)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Store a payload under its digest. Uses write-to-temp-then-rename so
    /// concurrent readers never observe a partial entry.
    pub fn put(&self, digest: &str, payload: &str) -> Result<()> {
        let path = self.path_for(digest)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(payload.as_bytes())?;
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    /// Delete one entry; returns whether it existed.
    pub fn remove(&self, digest: &str) -> Result<bool> {
        let path = self.path_for(digest)?;
        match fs::remove_file(&path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// Number of entries (diagnostic).
    pub fn len(&self) -> Result<usize> {
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            if entry.file_type()?.is_file()
                && is_digest(&entry.file_name().to_string_lossy())
            {
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }
}
