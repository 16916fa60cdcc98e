//! On-disk page cache: one JSON file per URL digest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of the exact URL bytes.
pub fn cache_key(url: &str) -> String {
    hex::encode(Sha256::digest(url.as_bytes()))
}

/// A fetched page after extraction; also the cache file schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedPage {
    pub url: String,
    pub fetched_at: DateTime<Utc>,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct PageCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl PageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PageCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, url: &str) -> PathBuf {
        self.dir.join(format!("{}.json", cache_key(url)))
    }

    /// Returns the cached page, treating unreadable or foreign entries as misses.
    pub fn load(&self, url: &str) -> Option<FetchedPage> {
        let path = self.path_for(url);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice::<FetchedPage>(&bytes) {
            Ok(page) if page.url == url => Some(page),
            Ok(_) => {
                tracing::warn!("cache entry {} belongs to another url", path.display());
                None
            }
            Err(e) => {
                tracing::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes through a temporary file and renames it into place, so
    /// concurrent writers of one key leave a complete file (last writer wins).
    pub fn store(&self, page: &FetchedPage) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let target = self.path_for(&page.url);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            cache_key(&page.url),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, serde_json::to_vec_pretty(page)?)?;
        fs::rename(&tmp, &target)
    }

    /// Deletes every cache entry and returns how many were removed.
    pub fn purge(&self) -> io::Result<usize> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let mut removed = 0;
        for entry in entries {
            let path = entry?.path();
            let is_entry = path.extension().is_some_and(|e| e == "json" || e == "tmp");
            if is_entry && path.is_file() {
                fs::remove_file(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}
