//! Registry of stored cubes with provider browsing and title search.
//!
//! Layout under the data root:
//!
//! ```text
//! catalog.json                    index: JSON list of CatalogEntry
//! data/<provider>/<cube_id>.json  canonical cube files (source of truth)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{parse_canonical, write_canonical, CanonicalError};
use crate::model::Provider;
use crate::storage::write_atomic;
use crate::time::{Granularity, TimeKey};
use crate::DataCube;

pub const INDEX_FILE: &str = "catalog.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub cube_id: String,
    pub provider: Provider,
    pub title: String,
    pub unit: String,
    pub granularity: Granularity,
    pub area_count: usize,
    pub time_span: Option<(TimeKey, TimeKey)>,
    /// Relative to the data root.
    pub storage_path: String,
}

impl CatalogEntry {
    pub fn describe(cube: &DataCube) -> Self {
        CatalogEntry {
            cube_id: cube.id().to_string(),
            provider: cube.provider(),
            title: cube.title().to_string(),
            unit: cube.unit().to_string(),
            granularity: cube.granularity(),
            area_count: cube.areas().len(),
            time_span: cube.time_span(),
            storage_path: format!("data/{}/{}.json", cube.provider(), cube.id()),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("storage failure at {path}: {reason}")]
    StorageFailure { path: PathBuf, reason: String },
    #[error("unknown cube `{0}`")]
    UnknownCube(String),
    #[error("stored cube {path} is corrupt: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: CanonicalError,
    },
}

fn storage(path: &Path, e: impl std::fmt::Display) -> CatalogError {
    CatalogError::StorageFailure { path: path.to_path_buf(), reason: e.to_string() }
}

fn sort_key(e: &CatalogEntry) -> (Provider, String, String) {
    (e.provider, e.title.to_lowercase(), e.cube_id.clone())
}

/// Many readers, one writer; the index file is replaced atomically on every registration.
pub struct Catalog {
    root: PathBuf,
    entries: RwLock<BTreeMap<String, CatalogEntry>>,
    cubes: RwLock<HashMap<String, Arc<DataCube>>>,
    writer: Mutex<()>,
}

impl Catalog {
    /// Opens the catalog under `root`, rebuilding the index from cube files when it is missing.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let root = root.into();
        let catalog = Catalog {
            root,
            entries: RwLock::new(BTreeMap::new()),
            cubes: RwLock::new(HashMap::new()),
            writer: Mutex::new(()),
        };
        let index = catalog.root.join(INDEX_FILE);
        match std::fs::read(&index) {
            Ok(bytes) => {
                let list: Vec<CatalogEntry> = serde_json::from_slice(&bytes).map_err(|e| storage(&index, e))?;
                *catalog.entries.write() = list.into_iter().map(|e| (e.cube_id.clone(), e)).collect();
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => catalog.rebuild_index()?,
            Err(e) => return Err(storage(&index, e)),
        }
        Ok(catalog)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Rescans `data/*/*.json` and rewrites the index.
    pub fn rebuild_index(&self) -> Result<(), CatalogError> {
        let _w = self.writer.lock();
        let mut entries = BTreeMap::new();
        let data = self.root.join("data");
        if data.is_dir() {
            for provider_dir in std::fs::read_dir(&data).map_err(|e| storage(&data, e))? {
                let provider_dir = provider_dir.map_err(|e| storage(&data, e))?.path();
                if !provider_dir.is_dir() {
                    continue;
                }
                for file in std::fs::read_dir(&provider_dir).map_err(|e| storage(&provider_dir, e))? {
                    let path = file.map_err(|e| storage(&provider_dir, e))?.path();
                    if path.extension().and_then(|e| e.to_str()) != Some("json") {
                        continue;
                    }
                    let bytes = std::fs::read(&path).map_err(|e| storage(&path, e))?;
                    let cube: DataCube =
                        parse_canonical(&bytes).map_err(|source| CatalogError::Corrupt { path: path.clone(), source })?;
                    let entry = CatalogEntry::describe(&cube);
                    entries.insert(entry.cube_id.clone(), entry);
                }
            }
        }
        self.write_index(&entries)?;
        *self.entries.write() = entries;
        self.cubes.write().clear();
        Ok(())
    }

    fn write_index(&self, entries: &BTreeMap<String, CatalogEntry>) -> Result<(), CatalogError> {
        let path = self.root.join(INDEX_FILE);
        let list: Vec<&CatalogEntry> = entries.values().collect();
        let mut bytes = serde_json::to_vec_pretty(&list).map_err(|e| storage(&path, e))?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(|e| storage(&path, e))
    }

    /// Stores a cube in canonical form and indexes it. Re-registering an id replaces it.
    pub fn register(&self, cube: DataCube) -> Result<CatalogEntry, CatalogError> {
        let _w = self.writer.lock();
        let entry = CatalogEntry::describe(&cube);
        let path = self.root.join(&entry.storage_path);
        write_atomic(&path, &write_canonical(&cube)).map_err(|e| storage(&path, e))?;

        let mut entries = self.entries.read().clone();
        if let Some(old) = entries.get(&entry.cube_id) {
            if old.storage_path != entry.storage_path {
                let _ = std::fs::remove_file(self.root.join(&old.storage_path));
            }
        }
        entries.insert(entry.cube_id.clone(), entry.clone());
        self.write_index(&entries)?;
        *self.entries.write() = entries;
        self.cubes.write().insert(entry.cube_id.clone(), Arc::new(cube));
        Ok(entry)
    }

    pub fn get(&self, cube_id: &str) -> Option<CatalogEntry> {
        self.entries.read().get(cube_id).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every entry, ordered by provider then title.
    pub fn entries(&self) -> Vec<CatalogEntry> {
        let mut all: Vec<_> = self.entries.read().values().cloned().collect();
        all.sort_by_key(sort_key);
        all
    }

    /// Loads (and memoizes) the cube behind an entry.
    pub fn load_cube(&self, cube_id: &str) -> Result<Arc<DataCube>, CatalogError> {
        if let Some(cube) = self.cubes.read().get(cube_id) {
            return Ok(cube.clone());
        }
        let entry = self.get(cube_id).ok_or_else(|| CatalogError::UnknownCube(cube_id.to_string()))?;
        let path = self.root.join(&entry.storage_path);
        let bytes = std::fs::read(&path).map_err(|e| storage(&path, e))?;
        let cube: DataCube = parse_canonical(&bytes).map_err(|source| CatalogError::Corrupt { path, source })?;
        let cube = Arc::new(cube);
        self.cubes.write().insert(cube_id.to_string(), cube.clone());
        Ok(cube)
    }

    /// Case-insensitive substring match; every whitespace-separated word must occur in the title.
    pub fn search_titles(&self, keyword: &str) -> Vec<CatalogEntry> {
        let words: Vec<String> = keyword.split_whitespace().map(str::to_lowercase).collect();
        let mut hits: Vec<_> = self
            .entries
            .read()
            .values()
            .filter(|e| {
                let title = e.title.to_lowercase();
                words.iter().all(|w| title.contains(w.as_str()))
            })
            .cloned()
            .collect();
        hits.sort_by_key(sort_key);
        hits
    }

    pub fn browse(&self, provider: Provider) -> Vec<CatalogEntry> {
        let mut hits: Vec<_> = self.entries.read().values().filter(|e| e.provider == provider).cloned().collect();
        hits.sort_by_key(sort_key);
        hits
    }

    /// Provider filter and title search combined; either may be absent.
    pub fn query(&self, provider: Option<Provider>, keyword: Option<&str>) -> Vec<CatalogEntry> {
        self.search_titles(keyword.unwrap_or(""))
            .into_iter()
            .filter(|e| provider.is_none_or(|p| e.provider == p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AreaKey, Observation};
    use crate::CubeBuilder;

    fn cube(id: &str, provider: Provider, title: &str) -> DataCube {
        CubeBuilder::new(id, provider)
            .title(title)
            .unit("u")
            .areas([AreaKey { code: "DEU".into(), label: "Germany".into() }])
            .times([TimeKey::year(2000).unwrap(), TimeKey::year(2001).unwrap()])
            .with(&[], "DEU", TimeKey::year(2000).unwrap(), Observation::present(1.0))
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn register_persists_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        let entry = cat.register(cube("a", Provider::Worldbank, "First")).unwrap();
        assert_eq!(entry.area_count, 1);
        assert_eq!(entry.time_span.unwrap().1, TimeKey::year(2001).unwrap());
        assert!(dir.path().join("data/worldbank/a.json").is_file());
        cat.register(cube("a", Provider::Eurostat, "Second")).unwrap();
        assert_eq!(cat.len(), 1);
        assert_eq!(cat.get("a").unwrap().title, "Second");
        assert!(!dir.path().join("data/worldbank/a.json").exists());

        let reopened = Catalog::open(dir.path()).unwrap();
        assert_eq!(reopened.entries(), cat.entries());
        assert_eq!(reopened.load_cube("a").unwrap().title(), "Second");
    }

    #[test]
    fn index_is_reconstructible() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        cat.register(cube("a", Provider::Worldbank, "A")).unwrap();
        cat.register(cube("b", Provider::Gapminder, "B")).unwrap();
        std::fs::remove_file(dir.path().join(INDEX_FILE)).unwrap();
        let rebuilt = Catalog::open(dir.path()).unwrap();
        assert_eq!(rebuilt.entries(), cat.entries());
    }

    #[test]
    fn unwritable_root_is_storage_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let cat = Catalog {
            root: blocker,
            entries: RwLock::new(BTreeMap::new()),
            cubes: RwLock::new(HashMap::new()),
            writer: Mutex::new(()),
        };
        assert!(matches!(cat.register(cube("a", Provider::User, "A")), Err(CatalogError::StorageFailure { .. })));
    }

    #[test]
    fn search_and_browse() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        cat.register(cube("le", Provider::Worldbank, "Life expectancy at birth, total (years)")).unwrap();
        cat.register(cube("le2", Provider::Eurostat, "Life expectancy by age and sex")).unwrap();
        cat.register(cube("gdp", Provider::Worldbank, "GDP per Capita (current US$)")).unwrap();

        let ids = |v: Vec<CatalogEntry>| v.into_iter().map(|e| e.cube_id).collect::<Vec<_>>();
        assert_eq!(ids(cat.search_titles("life expectancy")), ["le2", "le"]);
        assert_eq!(ids(cat.search_titles("LIFE")), ids(cat.search_titles("life")));
        assert_eq!(ids(cat.search_titles("expectancy total")), ["le"]);
        assert!(cat.search_titles("zzzz-no-match").is_empty());
        assert_eq!(cat.search_titles("").len(), 3);
        assert_eq!(ids(cat.browse(Provider::Worldbank)), ["gdp", "le"]);
        assert!(cat.browse(Provider::User).is_empty());
        assert_eq!(ids(cat.query(Some(Provider::Worldbank), Some("life"))), ["le"]);
    }
}
