//! Coordination between visualizations.
//!
//! Every visualization is reduced to a list of linkable items. Rules connect
//! pairs of items in different visualizations and are resolved in both
//! directions. A region item on a chart stands for every datapoint of that
//! chart inside its span: a datapoint hovers through the regions containing
//! it, and a rule landing on a region highlights the region's datapoints.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SeriesSet;
use crate::scalar::Scalar;
use crate::time::{times_match, TimeKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Datapoint,
    Place,
    Event,
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizItemKey {
    pub viz_id: String,
    pub kind: ItemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_span: Option<(TimeKey, TimeKey)>,
    /// Area label for datapoints; the entry text for places, events and regions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub local_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub display_value: String,
}

impl VizItemKey {
    pub fn item_ref(&self) -> ItemRef {
        ItemRef::new(&self.viz_id, &self.local_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemRef {
    pub viz_id: String,
    pub local_id: String,
}

impl ItemRef {
    pub fn new(viz_id: &str, local_id: &str) -> Self {
        ItemRef { viz_id: viz_id.to_string(), local_id: local_id.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleOrigin {
    Auto,
    Label,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRule {
    pub from: ItemRef,
    pub to: ItemRef,
    pub origin: RuleOrigin,
}

impl LinkRule {
    /// Same endpoints, in either direction.
    pub fn connects(&self, a: &ItemRef, b: &ItemRef) -> bool {
        (&self.from == a && &self.to == b) || (&self.from == b && &self.to == a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HighlightEntry {
    pub viz_id: String,
    pub local_id: String,
    pub display_value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightSet {
    pub anchor: HighlightEntry,
    pub items: Vec<HighlightEntry>,
}

/// Compiled link table: everything a client needs to resolve hovers locally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    pub dashboard_id: String,
    pub revision: u64,
    pub items: Vec<VizItemKey>,
    pub rules: Vec<LinkRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("unknown item {viz_id}/{local_id}")]
    UnknownItem { viz_id: String, local_id: String },
}

impl LinkError {
    pub fn unknown(r: &ItemRef) -> Self {
        LinkError::UnknownItem { viz_id: r.viz_id.clone(), local_id: r.local_id.clone() }
    }
}

/// User-entered visualization data: map locations, timeline events, annotated charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserVizKind {
    Map,
    Timeline,
    Chart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserVizEntry {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<TimeKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<TimeKey>,
}

impl UserVizEntry {
    pub fn place(label: &str, lat: f64, lon: f64) -> Self {
        UserVizEntry { label: label.into(), lat: Some(lat), lon: Some(lon), start: None, end: None }
    }

    pub fn event(label: &str, start: TimeKey, end: TimeKey) -> Self {
        UserVizEntry { label: label.into(), lat: None, lon: None, start: Some(start), end: Some(end) }
    }

    fn span(&self) -> Option<(TimeKey, TimeKey)> {
        let start = self.start.or(self.end)?;
        Some((start, self.end.unwrap_or(start)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserViz {
    pub user_viz_id: String,
    pub kind: UserVizKind,
    pub items: Vec<UserVizEntry>,
}

impl UserViz {
    pub fn validate(&self) -> Result<(), String> {
        for (i, entry) in self.items.iter().enumerate() {
            if entry.label.trim().is_empty() {
                return Err(format!("entry {i}: empty label"));
            }
            if let (Some(start), Some(end)) = (entry.start, entry.end) {
                if start.start_month() > end.end_month() {
                    return Err(format!("entry {i}: start {start} after end {end}"));
                }
            }
            if self.kind == UserVizKind::Timeline && entry.span().is_none() {
                return Err(format!("entry {i}: timeline events need a start"));
            }
        }
        Ok(())
    }
}

/// `77.0341 years`, `30%`, bare number when the unit is empty.
pub fn display_value(value: f64, unit: &str) -> String {
    let number = value.to_decimal();
    match unit.trim() {
        "" => number,
        "%" => format!("{number}%"),
        unit => format!("{number} {unit}"),
    }
}

pub fn datapoint_id(area: &str, time: &TimeKey) -> String {
    format!("{area}@{time}")
}

pub fn region_id(from: &TimeKey, to: &TimeKey) -> String {
    format!("region:{from}..{to}")
}

/// One datapoint per present observation of the slice.
pub fn index_series(viz_id: &str, set: &SeriesSet<f64>) -> Vec<VizItemKey> {
    let mut items = Vec::new();
    for series in &set.series {
        for point in &series.points {
            let Some(value) = point.observation.value else { continue };
            items.push(VizItemKey {
                viz_id: viz_id.to_string(),
                kind: ItemKind::Datapoint,
                area: Some(series.area.clone()),
                time: Some(point.time),
                time_span: None,
                label: Some(series.label.clone()),
                local_id: datapoint_id(&series.area, &point.time),
                value: Some(value),
                display_value: display_value(value, &set.unit),
            });
        }
    }
    items
}

/// Places (`p{i}`) for entries without a time, events (`e{i}`) for entries with one.
pub fn index_user_viz(viz_id: &str, viz: &UserViz) -> Vec<VizItemKey> {
    viz.items
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let span = if viz.kind == UserVizKind::Map { None } else { entry.span() };
            let (kind, local_id) = match span {
                Some(_) => (ItemKind::Event, format!("e{i}")),
                None => (ItemKind::Place, format!("p{i}")),
            };
            VizItemKey {
                viz_id: viz_id.to_string(),
                kind,
                area: None,
                time: None,
                time_span: span,
                label: Some(entry.label.clone()),
                local_id,
                value: None,
                display_value: entry.label.clone(),
            }
        })
        .collect()
}

pub fn region_item(viz_id: &str, from: TimeKey, to: TimeKey) -> VizItemKey {
    let label = format!("{from}..{to}");
    VizItemKey {
        viz_id: viz_id.to_string(),
        kind: ItemKind::Region,
        area: None,
        time: None,
        time_span: Some((from, to)),
        label: Some(label.clone()),
        local_id: region_id(&from, &to),
        value: None,
        display_value: label,
    }
}

/// Datapoints with equal area codes and matching times.
pub fn auto_link_pair(a: &[VizItemKey], b: &[VizItemKey]) -> Vec<LinkRule> {
    let mut by_area: HashMap<&str, Vec<&VizItemKey>> = HashMap::new();
    for item in b.iter().filter(|i| i.kind == ItemKind::Datapoint) {
        if let Some(area) = item.area.as_deref() {
            by_area.entry(area).or_default().push(item);
        }
    }
    let mut rules = Vec::new();
    for x in a.iter().filter(|i| i.kind == ItemKind::Datapoint) {
        let (Some(area), Some(tx)) = (x.area.as_deref(), x.time) else { continue };
        for y in by_area.get(area).into_iter().flatten() {
            if y.viz_id == x.viz_id {
                continue;
            }
            if y.time.is_some_and(|ty| times_match(&tx, &ty)) {
                rules.push(LinkRule { from: x.item_ref(), to: y.item_ref(), origin: RuleOrigin::Auto });
            }
        }
    }
    rules
}

pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Places whose normalized label equals a datapoint's normalized area label.
pub fn label_link(user_items: &[VizItemKey], stat_items: &[VizItemKey]) -> Vec<LinkRule> {
    let mut by_label: HashMap<String, Vec<&VizItemKey>> = HashMap::new();
    for item in stat_items.iter().filter(|i| i.kind == ItemKind::Datapoint) {
        if let Some(label) = item.label.as_deref() {
            by_label.entry(normalize_label(label)).or_default().push(item);
        }
    }
    let mut rules = Vec::new();
    for place in user_items.iter().filter(|i| i.kind == ItemKind::Place) {
        let Some(label) = place.label.as_deref() else { continue };
        for point in by_label.get(&normalize_label(label)).into_iter().flatten() {
            if point.viz_id != place.viz_id {
                rules.push(LinkRule { from: place.item_ref(), to: point.item_ref(), origin: RuleOrigin::Label });
            }
        }
    }
    rules
}

/// Auto and label rules for every pair of visualizations, then the manual rules.
pub fn compile_link_table(
    dashboard_id: &str,
    revision: u64,
    vizzes: &[Vec<VizItemKey>],
    manual: &[LinkRule],
) -> LinkTable {
    let mut rules = Vec::new();
    for (i, a) in vizzes.iter().enumerate() {
        for b in &vizzes[i + 1..] {
            rules.extend(auto_link_pair(a, b));
            rules.extend(label_link(a, b));
            rules.extend(label_link(b, a));
        }
    }
    rules.extend(manual.iter().cloned());
    LinkTable {
        dashboard_id: dashboard_id.to_string(),
        revision,
        items: vizzes.iter().flatten().cloned().collect(),
        rules,
    }
}

fn span_contains(span: &(TimeKey, TimeKey), t: &TimeKey) -> bool {
    span.0.start_month() <= t.start_month() && t.end_month() <= span.1.end_month()
}

/// Adjacency view of a [`LinkTable`] for repeated hover resolution.
#[derive(Debug, Clone)]
pub struct LinkIndex {
    items: Vec<VizItemKey>,
    by_ref: HashMap<ItemRef, usize>,
    neighbors: Vec<Vec<usize>>,
    regions_by_viz: HashMap<String, Vec<usize>>,
    points_by_viz: HashMap<String, Vec<usize>>,
}

impl LinkIndex {
    pub fn new(table: &LinkTable) -> Self {
        let items = table.items.clone();
        let by_ref: HashMap<ItemRef, usize> = items.iter().enumerate().map(|(i, it)| (it.item_ref(), i)).collect();
        let mut neighbors = vec![Vec::new(); items.len()];
        for rule in &table.rules {
            // Rules may outlive their endpoints (e.g. a datapoint deselected later).
            if let (Some(&f), Some(&t)) = (by_ref.get(&rule.from), by_ref.get(&rule.to)) {
                neighbors[f].push(t);
                neighbors[t].push(f);
            }
        }
        let mut regions_by_viz: HashMap<String, Vec<usize>> = HashMap::new();
        let mut points_by_viz: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, item) in items.iter().enumerate() {
            match item.kind {
                ItemKind::Region => regions_by_viz.entry(item.viz_id.clone()).or_default().push(i),
                ItemKind::Datapoint => points_by_viz.entry(item.viz_id.clone()).or_default().push(i),
                _ => {}
            }
        }
        LinkIndex { items, by_ref, neighbors, regions_by_viz, points_by_viz }
    }

    pub fn item(&self, r: &ItemRef) -> Option<&VizItemKey> {
        self.by_ref.get(r).map(|&i| &self.items[i])
    }

    /// The item plus the regions of its chart that contain it.
    fn ports(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let item = &self.items[i];
        if let (ItemKind::Datapoint, Some(t)) = (item.kind, item.time) {
            for &r in self.regions_by_viz.get(&item.viz_id).into_iter().flatten() {
                if self.items[r].time_span.is_some_and(|s| span_contains(&s, &t)) {
                    out.push(r);
                }
            }
        }
        out
    }

    /// The item plus, for a region, the datapoints of its chart inside the span.
    fn cover(&self, i: usize, out: &mut BTreeSet<usize>) {
        out.insert(i);
        let item = &self.items[i];
        if let (ItemKind::Region, Some(span)) = (item.kind, item.time_span) {
            for &p in self.points_by_viz.get(&item.viz_id).into_iter().flatten() {
                if self.items[p].time.is_some_and(|t| span_contains(&span, &t)) {
                    out.insert(p);
                }
            }
        }
    }

    /// Items one rule away from the anchor, ordered by viz then local id.
    pub fn resolve(&self, anchor: &ItemRef) -> Result<HighlightSet, LinkError> {
        let &a = self.by_ref.get(anchor).ok_or_else(|| LinkError::unknown(anchor))?;
        let mut reached = BTreeSet::new();
        for p in self.ports(a) {
            for &q in &self.neighbors[p] {
                self.cover(q, &mut reached);
            }
        }
        reached.remove(&a);
        let entry = |i: usize| {
            let it = &self.items[i];
            HighlightEntry {
                viz_id: it.viz_id.clone(),
                local_id: it.local_id.clone(),
                display_value: it.display_value.clone(),
            }
        };
        let mut items: Vec<HighlightEntry> = reached.into_iter().map(entry).collect();
        items.sort();
        Ok(HighlightSet { anchor: entry(a), items })
    }
}
