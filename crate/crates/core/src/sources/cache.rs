//! Content-addressed response cache with freshness control.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sources::transport::{Clock, HttpRequest, Transport};
use crate::sources::{Access, SourceDescriptor, SourceError};

/// Stable key for a (location, query) pair.
///
/// Both parts are length-prefixed before hashing so distinct pairs never
/// produce the same byte stream.
pub fn cache_key(location: &str, query: Option<&str>) -> String {
    let mut hasher = Sha256::new();
    hasher.update((location.len() as u64).to_le_bytes());
    hasher.update(location.as_bytes());
    match query {
        Some(q) => {
            hasher.update([1u8]);
            hasher.update((q.len() as u64).to_le_bytes());
            hasher.update(q.as_bytes());
        }
        None => hasher.update([0u8]),
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub key: String,
    pub location: String,
    pub query: Option<String>,
    pub fetched_at: DateTime<Utc>,
    pub etag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub meta: CacheMeta,
    pub bytes: Vec<u8>,
}

/// One file per entry: a JSON metadata line, a newline, then the raw body.
/// Writes go to a temp file in the same directory and are renamed into place.
#[derive(Debug, Clone)]
pub struct CacheStore {
    dir: PathBuf,
}

impl CacheStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CacheStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.entry"))
    }

    pub fn load(&self, key: &str) -> Option<CacheEntry> {
        let raw = std::fs::read(self.path(key)).ok()?;
        let split = raw.iter().position(|&b| b == b'\n')?;
        let meta: CacheMeta = serde_json::from_slice(&raw[..split]).ok()?;
        (meta.key == key).then(|| CacheEntry { meta, bytes: raw[split + 1..].to_vec() })
    }

    pub fn store(&self, entry: &CacheEntry) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, &entry.meta)?;
        tmp.write_all(b"\n")?;
        tmp.write_all(&entry.bytes)?;
        tmp.flush()?;
        tmp.persist(self.path(&entry.meta.key)).map_err(|e| e.error)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Network,
    Cache,
    LocalFile,
}

/// Bytes plus where they came from. `stale` is set when a refresh failed and
/// an expired cache entry was served instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub bytes: Vec<u8>,
    pub origin: Origin,
    pub fetched_at: Option<DateTime<Utc>>,
    pub stale: bool,
    pub notice: Option<String>,
}

/// Fetch layer: TTL cache in front of a [`Transport`], one refresh per key at a time.
pub struct Fetcher {
    cache: CacheStore,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    inflight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Fetcher {
    pub fn new(cache: CacheStore, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Self {
        Fetcher { cache, transport, clock, inflight: Mutex::new(HashMap::new()) }
    }

    pub fn cache(&self) -> &CacheStore {
        &self.cache
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        self.inflight.lock().entry(key.to_string()).or_default().clone()
    }

    fn request(desc: &SourceDescriptor, query: Option<&str>) -> HttpRequest {
        match (desc.access, query) {
            (Access::SparqlEndpoint, Some(q)) => HttpRequest::post(&desc.location, q)
                .header("Content-Type", "application/sparql-query")
                .header("Accept", "text/csv"),
            _ => HttpRequest::get(&desc.location),
        }
    }

    /// Returns cached bytes younger than the descriptor's TTL, otherwise refetches.
    ///
    /// A failed refresh falls back to an expired entry when one exists and
    /// flags the result as stale. Server errors (5xx) count as failures; other
    /// non-success statuses are reported as [`SourceError::BadStatus`].
    pub fn fetch_with_cache(&self, desc: &SourceDescriptor, query: Option<&str>) -> Result<Fetched, SourceError> {
        if desc.access == Access::LocalFile {
            let bytes = std::fs::read(&desc.location).map_err(|e| SourceError::FetchFailed {
                location: desc.location.clone(),
                reason: e.to_string(),
            })?;
            return Ok(Fetched { bytes, origin: Origin::LocalFile, fetched_at: None, stale: false, notice: None });
        }
        let key = cache_key(&desc.location, query);
        let lock = self.key_lock(&key);
        let _guard = lock.lock();

        let cached = self.cache.load(&key);
        let now = self.clock.now();
        if let Some(entry) = &cached {
            if now - entry.meta.fetched_at < desc.ttl() {
                return Ok(Fetched {
                    bytes: entry.bytes.clone(),
                    origin: Origin::Cache,
                    fetched_at: Some(entry.meta.fetched_at),
                    stale: false,
                    notice: None,
                });
            }
        }

        let mut request = Self::request(desc, query);
        if let Some(etag) = cached.as_ref().and_then(|c| c.meta.etag.as_deref()) {
            request = request.header("If-None-Match", etag);
        }
        let failure = match self.transport.execute(&request) {
            Ok(resp) if resp.status == 304 && cached.is_some() => {
                let mut entry = cached.expect("checked above");
                entry.meta.fetched_at = now;
                self.cache.store(&entry).map_err(|e| SourceError::Cache(e.to_string()))?;
                return Ok(Fetched {
                    bytes: entry.bytes,
                    origin: Origin::Cache,
                    fetched_at: Some(now),
                    stale: false,
                    notice: None,
                });
            }
            Ok(resp) if resp.is_success() => {
                let entry = CacheEntry {
                    meta: CacheMeta {
                        key,
                        location: desc.location.clone(),
                        query: query.map(str::to_string),
                        fetched_at: now,
                        etag: resp.header("ETag").map(str::to_string),
                    },
                    bytes: resp.body,
                };
                if let Err(e) = self.cache.store(&entry) {
                    log::warn!("could not cache {}: {e}", desc.location);
                }
                return Ok(Fetched {
                    bytes: entry.bytes,
                    origin: Origin::Network,
                    fetched_at: Some(now),
                    stale: false,
                    notice: None,
                });
            }
            Ok(resp) if resp.status >= 500 => format!("HTTP {}", resp.status),
            Ok(resp) => {
                return Err(SourceError::BadStatus { location: desc.location.clone(), status: resp.status });
            }
            Err(e) => e.0,
        };
        match cached {
            Some(entry) => {
                let age = now - entry.meta.fetched_at;
                let notice = format!(
                    "refresh of {} failed ({failure}); serving cached copy {} minutes old",
                    desc.location,
                    age.num_minutes()
                );
                log::warn!("{notice}");
                Ok(Fetched {
                    bytes: entry.bytes,
                    origin: Origin::Cache,
                    fetched_at: Some(entry.meta.fetched_at),
                    stale: true,
                    notice: Some(notice),
                })
            }
            None => Err(SourceError::FetchFailed { location: desc.location.clone(), reason: failure }),
        }
    }
}
