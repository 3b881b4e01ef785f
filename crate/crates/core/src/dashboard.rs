//! Dashboards: persisted compositions of visualizations, their selections and
//! manual link rules, each served together with its compiled link table.
//!
//! On disk (under the data root shared with the catalog):
//!
//! ```text
//! dashboards/<dashboard_id>.json
//! uservisualizations/<user_viz_id>.json
//! ```
//!
//! Every mutation names the revision it was computed against; a stale
//! revision is rejected with [`DashboardError::Conflict`].

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError};
use crate::link::{
    compile_link_table, index_series, index_user_viz, region_id, region_item, HighlightSet, ItemRef, LinkError,
    LinkIndex, LinkRule, LinkTable, RuleOrigin, UserViz, UserVizEntry, UserVizKind, VizItemKey,
};
use crate::model::{default_selection, resolve_choice, slice, ModelError, Selection};
use crate::storage::write_atomic;
use crate::time::TimeKey;
use crate::{DataCube, SeriesSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VizType {
    Line,
    Bar,
    Area,
    Pie,
    Scatter,
    Map,
    Timeline,
}

impl VizType {
    pub fn is_chart(self) -> bool {
        !matches!(self, VizType::Map | VizType::Timeline)
    }

    fn name(self) -> &'static str {
        match self {
            VizType::Line => "line",
            VizType::Bar => "bar",
            VizType::Area => "area",
            VizType::Pie => "pie",
            VizType::Scatter => "scatter",
            VizType::Map => "map",
            VizType::Timeline => "timeline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutHint {
    Full,
    Scaled,
}

/// A time region on a chart, created by the Mapping Editor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub from: TimeKey,
    pub to: TimeKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizConfig {
    pub viz_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_viz_id: Option<String>,
    pub viz_type: VizType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    pub layout_hint: LayoutHint,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dashboard {
    pub dashboard_id: String,
    pub title: String,
    pub visualizations: Vec<VizConfig>,
    pub manual_rules: Vec<LinkRule>,
    pub revision: u64,
}

impl Dashboard {
    pub fn viz(&self, viz_id: &str) -> Option<&VizConfig> {
        self.visualizations.iter().find(|v| v.viz_id == viz_id)
    }
}

#[derive(Debug, Clone)]
pub enum VizSource {
    Cube(String),
    User(String),
}

/// Partial update of one visualization. Absent fields are left alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionDelta {
    /// Replaces the selected areas.
    pub areas: Option<Vec<String>>,
    /// Flips membership of each listed area (legend clicks).
    pub toggle_areas: Vec<String>,
    /// Dimension name to member code.
    pub dimensions: BTreeMap<String, String>,
    pub time_from: Option<TimeKey>,
    pub time_to: Option<TimeKey>,
    pub viz_type: Option<VizType>,
}

impl SelectionDelta {
    fn touches_selection(&self) -> bool {
        self.areas.is_some()
            || !self.toggle_areas.is_empty()
            || !self.dimensions.is_empty()
            || self.time_from.is_some()
            || self.time_to.is_some()
    }
}

/// An existing item, or a chart region given by its span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEndpoint {
    pub viz_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_span: Option<(TimeKey, TimeKey)>,
}

impl RuleEndpoint {
    pub fn item(viz_id: &str, local_id: &str) -> Self {
        RuleEndpoint { viz_id: viz_id.into(), local_id: Some(local_id.into()), time_span: None }
    }

    pub fn region(viz_id: &str, from: TimeKey, to: TimeKey) -> Self {
        RuleEndpoint { viz_id: viz_id.into(), local_id: None, time_span: Some((from, to)) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub code: String,
    pub label: String,
    pub selected: bool,
}

/// What a client needs to draw one visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePayload {
    pub viz: VizConfig,
    pub title: String,
    pub unit: String,
    /// Every cube area in cube order.
    pub legend: Vec<LegendEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_viz: Option<UserViz>,
}

/// A dashboard revision with its compiled link table.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub dashboard: Dashboard,
    pub link_table: LinkTable,
    index: LinkIndex,
}

impl Snapshot {
    pub fn resolve(&self, anchor: &ItemRef) -> Result<HighlightSet, LinkError> {
        self.index.resolve(anchor)
    }

    fn index_has(&self, r: &ItemRef) -> bool {
        self.index.item(r).is_some()
    }

    pub fn view(&self) -> DashboardView {
        DashboardView { dashboard: self.dashboard.clone(), link_table: self.link_table.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardView {
    pub dashboard: Dashboard,
    pub link_table: LinkTable,
}

#[derive(Debug, Error)]
pub enum DashboardError {
    #[error("unknown dashboard `{0}`")]
    UnknownDashboard(String),
    #[error("unknown cube `{0}`")]
    UnknownCube(String),
    #[error("unknown user visualization `{0}`")]
    UnknownUserViz(String),
    #[error("unknown visualization `{0}`")]
    UnknownViz(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("both ends of a rule are in visualization `{0}`")]
    SameViz(String),
    #[error("viz type `{viz_type}` does not fit {data}")]
    IncompatibleVizType { viz_type: String, data: String },
    #[error("revision conflict: expected {expected}, current is {actual}")]
    Conflict { expected: u64, actual: u64 },
    #[error("invalid request: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Catalog(CatalogError),
    #[error("storage failure at {path}: {reason}")]
    StorageFailure { path: PathBuf, reason: String },
}

impl From<CatalogError> for DashboardError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownCube(id) => DashboardError::UnknownCube(id),
            other => DashboardError::Catalog(other),
        }
    }
}

fn storage(path: &Path, e: impl std::fmt::Display) -> DashboardError {
    DashboardError::StorageFailure { path: path.to_path_buf(), reason: e.to_string() }
}

fn unknown_item(viz_id: &str, local_id: &str) -> DashboardError {
    DashboardError::Link(LinkError::UnknownItem { viz_id: viz_id.into(), local_id: local_id.into() })
}

fn allowed_for_user(kind: UserVizKind, viz_type: VizType) -> bool {
    match kind {
        UserVizKind::Map => viz_type == VizType::Map,
        UserVizKind::Timeline => viz_type == VizType::Timeline,
        UserVizKind::Chart => viz_type.is_chart(),
    }
}

fn default_for_user(kind: UserVizKind) -> VizType {
    match kind {
        UserVizKind::Map => VizType::Map,
        UserVizKind::Timeline => VizType::Timeline,
        UserVizKind::Chart => VizType::Line,
    }
}

fn kind_name(kind: UserVizKind) -> &'static str {
    match kind {
        UserVizKind::Map => "a map user visualization",
        UserVizKind::Timeline => "a timeline user visualization",
        UserVizKind::Chart => "a chart user visualization",
    }
}

fn next_id(prefix: &str, taken: impl Iterator<Item = String>) -> String {
    let max = taken.filter_map(|id| id.strip_prefix(prefix).and_then(|n| n.parse::<u64>().ok())).max().unwrap_or(0);
    format!("{prefix}{:04}", max + 1)
}

fn load_dir<T: DeserializeOwned>(dir: &Path) -> Result<Vec<T>, DashboardError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| storage(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| storage(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| storage(p, e))
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DashboardError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| storage(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).map_err(|e| storage(path, e))
}

pub struct DashboardStore {
    dashboards_dir: PathBuf,
    user_dir: PathBuf,
    catalog: Arc<Catalog>,
    snapshots: RwLock<BTreeMap<String, Arc<Snapshot>>>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    user_vizzes: RwLock<BTreeMap<String, Arc<UserViz>>>,
    create_lock: Mutex<()>,
}

impl DashboardStore {
    /// Opens (or initializes) the store under `data_root`, recompiling every stored dashboard.
    pub fn open(data_root: &Path, catalog: Arc<Catalog>) -> Result<Self, DashboardError> {
        let dashboards_dir = data_root.join("dashboards");
        let user_dir = data_root.join("uservisualizations");
        for dir in [&dashboards_dir, &user_dir] {
            std::fs::create_dir_all(dir).map_err(|e| storage(dir, e))?;
        }
        let store = DashboardStore {
            dashboards_dir,
            user_dir,
            catalog,
            snapshots: RwLock::new(BTreeMap::new()),
            locks: Mutex::new(HashMap::new()),
            user_vizzes: RwLock::new(BTreeMap::new()),
            create_lock: Mutex::new(()),
        };
        let user: Vec<UserViz> = load_dir(&store.user_dir)?;
        *store.user_vizzes.write() = user.into_iter().map(|u| (u.user_viz_id.clone(), Arc::new(u))).collect();
        let dashboards: Vec<Dashboard> = load_dir(&store.dashboards_dir)?;
        let mut snapshots = BTreeMap::new();
        for d in dashboards {
            let snap = store.compile(d)?;
            snapshots.insert(snap.dashboard.dashboard_id.clone(), Arc::new(snap));
        }
        *store.snapshots.write() = snapshots;
        Ok(store)
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    fn cube_for(&self, viz: &VizConfig) -> Result<Option<Arc<DataCube>>, DashboardError> {
        viz.cube_id.as_deref().map(|id| self.catalog.load_cube(id)).transpose().map_err(Into::into)
    }

    fn user_viz(&self, id: &str) -> Result<Arc<UserViz>, DashboardError> {
        self.user_vizzes.read().get(id).cloned().ok_or_else(|| DashboardError::UnknownUserViz(id.to_string()))
    }

    fn index_viz(&self, viz: &VizConfig) -> Result<Vec<VizItemKey>, DashboardError> {
        let mut items = if let Some(cube) = self.cube_for(viz)? {
            let sel = viz.selection.as_ref().ok_or_else(|| DashboardError::Validation("cube viz without selection".into()))?;
            index_series(&viz.viz_id, &slice(&cube, sel)?)
        } else {
            let id = viz.user_viz_id.as_deref().unwrap_or_default();
            index_user_viz(&viz.viz_id, &*self.user_viz(id)?)
        };
        items.extend(viz.regions.iter().map(|r| region_item(&viz.viz_id, r.from, r.to)));
        Ok(items)
    }

    fn compile(&self, dashboard: Dashboard) -> Result<Snapshot, DashboardError> {
        let vizzes = dashboard.visualizations.iter().map(|v| self.index_viz(v)).collect::<Result<Vec<_>, _>>()?;
        let link_table =
            compile_link_table(&dashboard.dashboard_id, dashboard.revision, &vizzes, &dashboard.manual_rules);
        let index = LinkIndex::new(&link_table);
        Ok(Snapshot { dashboard, link_table, index })
    }

    fn dashboard_path(&self, id: &str) -> PathBuf {
        self.dashboards_dir.join(format!("{id}.json"))
    }

    pub fn get(&self, dashboard_id: &str) -> Result<Arc<Snapshot>, DashboardError> {
        self.snapshots
            .read()
            .get(dashboard_id)
            .cloned()
            .ok_or_else(|| DashboardError::UnknownDashboard(dashboard_id.to_string()))
    }

    pub fn list(&self) -> Vec<Arc<Snapshot>> {
        self.snapshots.read().values().cloned().collect()
    }

    pub fn create_dashboard(&self, title: &str) -> Result<Arc<Snapshot>, DashboardError> {
        let title = title.trim();
        if title.is_empty() {
            return Err(DashboardError::Validation("dashboard title must not be empty".into()));
        }
        let _guard = self.create_lock.lock();
        let id = next_id("dash-", self.snapshots.read().keys().cloned());
        let dashboard = Dashboard {
            dashboard_id: id.clone(),
            title: title.to_string(),
            visualizations: Vec::new(),
            manual_rules: Vec::new(),
            revision: 1,
        };
        write_json(&self.dashboard_path(&id), &dashboard)?;
        let snap = Arc::new(self.compile(dashboard)?);
        self.snapshots.write().insert(id, snap.clone());
        Ok(snap)
    }

    /// Applies `f` to a copy of the current revision. `f` reports whether it
    /// changed anything; unchanged results keep the current revision.
    fn mutate<T>(
        &self,
        dashboard_id: &str,
        expected_revision: Option<u64>,
        f: impl FnOnce(&mut Dashboard, &Snapshot) -> Result<(T, bool), DashboardError>,
    ) -> Result<(T, Arc<Snapshot>), DashboardError> {
        self.get(dashboard_id)?;
        let lock = self.locks.lock().entry(dashboard_id.to_string()).or_default().clone();
        let _guard = lock.lock();
        let current = self.get(dashboard_id)?;
        if let Some(expected) = expected_revision {
            if expected != current.dashboard.revision {
                return Err(DashboardError::Conflict { expected, actual: current.dashboard.revision });
            }
        }
        let mut next = current.dashboard.clone();
        let (value, changed) = f(&mut next, &current)?;
        if !changed {
            return Ok((value, current));
        }
        next.revision = current.dashboard.revision + 1;
        let snap = Arc::new(self.compile(next)?);
        write_json(&self.dashboard_path(dashboard_id), &snap.dashboard)?;
        self.snapshots.write().insert(dashboard_id.to_string(), snap.clone());
        Ok((value, snap))
    }

    pub fn add_visualization(
        &self,
        dashboard_id: &str,
        source: VizSource,
        viz_type: Option<VizType>,
        expected_revision: Option<u64>,
    ) -> Result<(VizConfig, Arc<Snapshot>), DashboardError> {
        let (cube_id, user_viz_id, viz_type, selection) = match source {
            VizSource::Cube(id) => {
                let cube = self.catalog.load_cube(&id)?;
                let viz_type = viz_type.unwrap_or(VizType::Line);
                if !viz_type.is_chart() {
                    return Err(DashboardError::IncompatibleVizType {
                        viz_type: viz_type.name().into(),
                        data: "a statistical cube".into(),
                    });
                }
                (Some(id), None, viz_type, Some(default_selection(&cube)?))
            }
            VizSource::User(id) => {
                let user = self.user_viz(&id)?;
                let viz_type = viz_type.unwrap_or(default_for_user(user.kind));
                if !allowed_for_user(user.kind, viz_type) {
                    return Err(DashboardError::IncompatibleVizType {
                        viz_type: viz_type.name().into(),
                        data: kind_name(user.kind).into(),
                    });
                }
                (None, Some(id), viz_type, None)
            }
        };
        self.mutate(dashboard_id, expected_revision, |d, _| {
            for v in &mut d.visualizations {
                v.layout_hint = LayoutHint::Scaled;
            }
            let viz = VizConfig {
                viz_id: format!("v{}", d.visualizations.len() + 1),
                cube_id,
                user_viz_id,
                viz_type,
                selection,
                layout_hint: LayoutHint::Full,
                regions: Vec::new(),
            };
            d.visualizations.push(viz.clone());
            Ok((viz, true))
        })
    }

    pub fn update_selection(
        &self,
        dashboard_id: &str,
        viz_id: &str,
        delta: &SelectionDelta,
        expected_revision: Option<u64>,
    ) -> Result<(VizConfig, Arc<Snapshot>), DashboardError> {
        let current = self.get(dashboard_id)?;
        let viz = current.dashboard.viz(viz_id).ok_or_else(|| DashboardError::UnknownViz(viz_id.to_string()))?;
        let cube = self.cube_for(viz)?;
        let user = viz.user_viz_id.as_deref().map(|id| self.user_viz(id)).transpose()?;
        self.mutate(dashboard_id, expected_revision, |d, _| {
            let viz = d
                .visualizations
                .iter_mut()
                .find(|v| v.viz_id == viz_id)
                .ok_or_else(|| DashboardError::UnknownViz(viz_id.to_string()))?;
            if let Some(viz_type) = delta.viz_type {
                let ok = match &user {
                    Some(u) => allowed_for_user(u.kind, viz_type),
                    None => viz_type.is_chart(),
                };
                if !ok {
                    let data = user.as_ref().map_or("a statistical cube", |u| kind_name(u.kind));
                    return Err(DashboardError::IncompatibleVizType {
                        viz_type: viz_type.name().into(),
                        data: data.into(),
                    });
                }
                viz.viz_type = viz_type;
            }
            if delta.touches_selection() {
                let (Some(cube), Some(sel)) = (&cube, viz.selection.as_mut()) else {
                    return Err(DashboardError::Validation("user visualizations have no selection".into()));
                };
                apply_delta(cube, sel, delta)?;
            }
            Ok((viz.clone(), true))
        })
    }

    pub fn add_manual_rule(
        &self,
        dashboard_id: &str,
        from: &RuleEndpoint,
        to: &RuleEndpoint,
        expected_revision: Option<u64>,
    ) -> Result<(LinkRule, Arc<Snapshot>), DashboardError> {
        if from.viz_id == to.viz_id {
            return Err(DashboardError::SameViz(from.viz_id.clone()));
        }
        self.mutate(dashboard_id, expected_revision, |d, snap| {
            let mut changed = false;
            let from = resolve_endpoint(d, snap, from, &mut changed)?;
            let to = resolve_endpoint(d, snap, to, &mut changed)?;
            if let Some(existing) =
                d.manual_rules.iter().find(|r| r.origin == RuleOrigin::Manual && r.connects(&from, &to))
            {
                return Ok((existing.clone(), changed));
            }
            let rule = LinkRule { from, to, origin: RuleOrigin::Manual };
            d.manual_rules.push(rule.clone());
            Ok((rule, true))
        })
    }

    pub fn resolve(&self, dashboard_id: &str, anchor: &ItemRef) -> Result<HighlightSet, DashboardError> {
        Ok(self.get(dashboard_id)?.resolve(anchor)?)
    }

    pub fn slice_payload(&self, dashboard_id: &str, viz_id: &str) -> Result<SlicePayload, DashboardError> {
        let snap = self.get(dashboard_id)?;
        let viz = snap.dashboard.viz(viz_id).ok_or_else(|| DashboardError::UnknownViz(viz_id.to_string()))?;
        if let Some(cube) = self.cube_for(viz)? {
            let sel = viz.selection.as_ref().ok_or_else(|| DashboardError::Validation("cube viz without selection".into()))?;
            let legend = cube
                .areas()
                .iter()
                .map(|a| LegendEntry { code: a.code.clone(), label: a.label.clone(), selected: sel.areas.contains(&a.code) })
                .collect();
            return Ok(SlicePayload {
                viz: viz.clone(),
                title: cube.title().to_string(),
                unit: cube.unit().to_string(),
                legend,
                series: Some(slice(&cube, sel)?),
                user_viz: None,
            });
        }
        let user = self.user_viz(viz.user_viz_id.as_deref().unwrap_or_default())?;
        Ok(SlicePayload {
            viz: viz.clone(),
            title: String::new(),
            unit: String::new(),
            legend: Vec::new(),
            series: None,
            user_viz: Some((*user).clone()),
        })
    }

    pub fn create_user_viz(&self, kind: UserVizKind, items: Vec<UserVizEntry>) -> Result<UserViz, DashboardError> {
        let _guard = self.create_lock.lock();
        let id = next_id("uv-", self.user_vizzes.read().keys().cloned());
        let viz = UserViz { user_viz_id: id.clone(), kind, items };
        viz.validate().map_err(DashboardError::Validation)?;
        write_json(&self.user_dir.join(format!("{id}.json")), &viz)?;
        self.user_vizzes.write().insert(id, Arc::new(viz.clone()));
        Ok(viz)
    }

    pub fn get_user_viz(&self, id: &str) -> Result<UserViz, DashboardError> {
        Ok((*self.user_viz(id)?).clone())
    }
}

fn apply_delta(cube: &DataCube, sel: &mut Selection, delta: &SelectionDelta) -> Result<(), DashboardError> {
    let position = |code: &str| cube.area_position(code).ok_or_else(|| ModelError::UnknownArea(code.to_string()));
    if let Some(areas) = &delta.areas {
        for code in areas {
            position(code)?;
        }
        sel.areas = areas.clone();
    }
    for code in &delta.toggle_areas {
        position(code)?;
        match sel.areas.iter().position(|a| a == code) {
            Some(i) => {
                sel.areas.remove(i);
            }
            None => sel.areas.push(code.clone()),
        }
    }
    let mut positions = sel.areas.iter().map(|a| position(a)).collect::<Result<Vec<_>, _>>()?;
    positions.sort_unstable();
    positions.dedup();
    sel.areas = positions.into_iter().map(|i| cube.areas()[i].code.clone()).collect();

    let mut choice = sel.dimension_choice.clone();
    choice.extend(delta.dimensions.iter().map(|(k, v)| (k.clone(), v.clone())));
    sel.dimension_choice = resolve_choice(cube, &choice)?.1;

    let from = delta.time_from.unwrap_or(sel.time_from);
    let to = delta.time_to.unwrap_or(sel.time_to);
    if from > to {
        return Err(ModelError::EmptyTimeRange { from, to }.into());
    }
    sel.time_from = from;
    sel.time_to = to;
    Ok(())
}

/// Turns an endpoint into an item reference, creating a chart region if needed.
fn resolve_endpoint(
    d: &mut Dashboard,
    snap: &Snapshot,
    endpoint: &RuleEndpoint,
    changed: &mut bool,
) -> Result<ItemRef, DashboardError> {
    let missing = || unknown_item(&endpoint.viz_id, endpoint.local_id.as_deref().unwrap_or(""));
    let viz = d.visualizations.iter_mut().find(|v| v.viz_id == endpoint.viz_id).ok_or_else(missing)?;
    match (&endpoint.local_id, endpoint.time_span) {
        (Some(local_id), _) => {
            let r = ItemRef::new(&endpoint.viz_id, local_id);
            snap.index_has(&r).then_some(r).ok_or_else(missing)
        }
        (None, Some((from, to))) => {
            if !viz.viz_type.is_chart() {
                return Err(unknown_item(&endpoint.viz_id, &region_id(&from, &to)));
            }
            if from > to {
                return Err(DashboardError::Validation(format!("region {from}..{to} is empty")));
            }
            let region = Region { from, to };
            if !viz.regions.contains(&region) {
                viz.regions.push(region);
                *changed = true;
            }
            Ok(ItemRef::new(&endpoint.viz_id, &region_id(&from, &to)))
        }
        (None, None) => Err(DashboardError::Validation("rule endpoint needs local_id or time_span".into())),
    }
}
