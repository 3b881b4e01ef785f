//! HTTP API, command line and network transport around `statlink-core`.

pub mod api;
pub mod cli;
pub mod transport;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use statlink_core::catalog::Catalog;
use statlink_core::dashboard::{DashboardError, DashboardStore};
use statlink_core::{default_selection, parse_time_key, DataCube, ModelError, Selection};

pub const DATA_DIR_ENV: &str = "STATLINK_DATA_DIR";

/// Catalog and dashboard store sharing one data directory.
pub struct AppState {
    pub data_dir: PathBuf,
    pub catalog: Arc<Catalog>,
    pub store: Arc<DashboardStore>,
}

impl AppState {
    /// Layout: `<data_dir>/catalog`, `<data_dir>/dashboards`, `<data_dir>/uservisualizations`.
    pub fn open(data_dir: &Path) -> Result<Self, DashboardError> {
        let catalog = Arc::new(Catalog::open(catalog_root(data_dir))?);
        let store = Arc::new(DashboardStore::open(data_dir, catalog.clone())?);
        Ok(AppState { data_dir: data_dir.to_path_buf(), catalog, store })
    }
}

pub fn catalog_root(data_dir: &Path) -> PathBuf {
    data_dir.join("catalog")
}

/// Starts from the default selection and overrides what the caller supplied.
pub fn build_selection(
    cube: &DataCube,
    areas: &[String],
    from: Option<&str>,
    to: Option<&str>,
    dims: &[(String, String)],
) -> Result<Selection, ModelError> {
    let mut sel = default_selection(cube)?;
    if !areas.is_empty() {
        for code in areas {
            if cube.area(code).is_none() {
                return Err(ModelError::UnknownArea(code.clone()));
            }
        }
        sel.areas = areas.to_vec();
    }
    let time = |text: &str| parse_time_key(text).map_err(|e| ModelError::Invalid(e.to_string()));
    if let Some(from) = from {
        sel.time_from = time(from)?;
    }
    if let Some(to) = to {
        sel.time_to = time(to)?;
    }
    for (name, member) in dims {
        if !cube.dimensions().iter().any(|d| &d.name == name) {
            return Err(ModelError::Invalid(format!("cube `{}` has no dimension `{name}`", cube.id())));
        }
        sel.dimension_choice.insert(name.clone(), member.clone());
    }
    Ok(sel)
}
