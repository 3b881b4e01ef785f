//! Provider access: descriptors, cached fetching, SPARQL slices.

mod cache;
mod sparql;
pub mod transport;

use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, CacheEntry, CacheMeta, CacheStore, Fetched, Fetcher, Origin};
pub use sparql::{build_sparql_select, build_sparql_select_with, parse_sparql_csv, SparqlVocabulary};

use crate::ingest::{ingest_bytes, IngestError, IngestOptions, ProviderHints};
use crate::model::{ModelError, Provider, Selection};
use crate::DataCube;

/// Environment variable naming the response cache directory.
pub const CACHE_DIR_ENV: &str = "STATLINK_CACHE_DIR";

/// Providers refresh their bulk data twice a day.
pub const DEFAULT_TTL_SECS: u64 = 12 * 60 * 60;

fn default_ttl() -> u64 {
    DEFAULT_TTL_SECS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    StaticUrl,
    SparqlEndpoint,
    LocalFile,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultFormat {
    Tsv,
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub provider: Provider,
    pub dataset_id: String,
    pub access: Access,
    /// URL, endpoint URL, or file path depending on `access`.
    pub location: String,
    #[serde(default = "default_ttl")]
    pub freshness_ttl_secs: u64,
    #[serde(default)]
    pub result_format_hint: ResultFormat,
}

impl SourceDescriptor {
    pub fn local_file(provider: Provider, dataset_id: impl Into<String>, path: impl Into<String>) -> Self {
        SourceDescriptor {
            provider,
            dataset_id: dataset_id.into(),
            access: Access::LocalFile,
            location: path.into(),
            freshness_ttl_secs: DEFAULT_TTL_SECS,
            result_format_hint: ResultFormat::Csv,
        }
    }

    pub fn ttl(&self) -> Duration {
        Duration::seconds(self.freshness_ttl_secs as i64)
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if self.location.trim().is_empty() {
            return Err(SourceError::InvalidDescriptor(format!("{}: empty location", self.dataset_id)));
        }
        if self.freshness_ttl_secs == 0 {
            return Err(SourceError::InvalidDescriptor(format!("{}: ttl must be positive", self.dataset_id)));
        }
        if self.dataset_id.trim().is_empty() {
            return Err(SourceError::InvalidDescriptor("empty dataset id".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("fetching {location} failed: {reason}")]
    FetchFailed { location: String, reason: String },
    #[error("{location} answered HTTP {status}")]
    BadStatus { location: String, status: u16 },
    #[error("selection has no areas or an empty time range")]
    EmptySelection,
    #[error("invalid source descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("{dataset_id}: bad query results: {reason}")]
    Results { dataset_id: String, reason: String },
    #[error("{dataset_id}: {source}")]
    Ingest {
        dataset_id: String,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("registry {path}: {reason}")]
    Registry { path: PathBuf, reason: String },
}

/// Reads a JSON list of descriptors.
pub fn load_registry(path: &Path) -> Result<Vec<SourceDescriptor>, SourceError> {
    let err = |reason: String| SourceError::Registry { path: path.to_path_buf(), reason };
    let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
    let descriptors: Vec<SourceDescriptor> = serde_json::from_slice(&bytes).map_err(|e| err(e.to_string()))?;
    for d in &descriptors {
        d.validate()?;
    }
    Ok(descriptors)
}

/// Fetches, sniffs and parses one source into cubes tagged with the descriptor's provider.
pub fn ingest_source(
    fetcher: &Fetcher,
    desc: &SourceDescriptor,
    sel: Option<&Selection>,
    options: &IngestOptions,
) -> Result<Vec<DataCube>, SourceError> {
    desc.validate()?;
    if desc.access == Access::SparqlEndpoint {
        let sel = sel.ok_or(SourceError::EmptySelection)?;
        let query = build_sparql_select(&desc.dataset_id, sel)?;
        let fetched = fetcher.fetch_with_cache(desc, Some(&query))?;
        return Ok(vec![parse_sparql_csv(&fetched.bytes, &desc.dataset_id, desc.provider, sel, &options.areas)?]);
    }
    let fetched = fetcher.fetch_with_cache(desc, None)?;
    let mut options = options.clone();
    options.hints = ProviderHints {
        provider: Some(desc.provider),
        id: options.hints.id.clone().or_else(|| Some(desc.dataset_id.clone())),
        ..options.hints
    };
    let cubes = ingest_bytes::<f64>(&fetched.bytes, &desc.location, &options)
        .map_err(|source| SourceError::Ingest { dataset_id: desc.dataset_id.clone(), source })?;
    Ok(cubes.into_iter().map(|c| c.with_provider(desc.provider)).collect())
}
