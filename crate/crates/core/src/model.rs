//! Canonical data cube: extra dimensions × areas × time points → observations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::time::{Granularity, TimeKey};

/// Number of areas a fresh selection shows.
pub const DEFAULT_AREA_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    Eurostat,
    Worldbank,
    Gapminder,
    Eusi,
    User,
    Fixture,
}

impl Provider {
    pub const ALL: [Provider; 6] = [
        Provider::Eurostat,
        Provider::Worldbank,
        Provider::Gapminder,
        Provider::Eusi,
        Provider::User,
        Provider::Fixture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provider::Eurostat => "eurostat",
            Provider::Worldbank => "worldbank",
            Provider::Gapminder => "gapminder",
            Provider::Eusi => "eusi",
            Provider::User => "user",
            Provider::Fixture => "fixture",
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provider {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded = s.trim().to_lowercase();
        Provider::ALL
            .into_iter()
            .find(|p| p.as_str() == folded)
            .ok_or_else(|| ModelError::Invalid(format!("unknown provider `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AreaKey {
    pub code: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionMember {
    pub code: String,
    pub label: String,
}

/// A non-area, non-time dimension. Member order is source order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub name: String,
    pub members: Vec<DimensionMember>,
}

impl DimensionSpec {
    pub fn new(name: impl Into<String>) -> Self {
        DimensionSpec { name: name.into(), members: Vec::new() }
    }

    pub fn with_members<'a>(name: impl Into<String>, codes: impl IntoIterator<Item = &'a str>) -> Self {
        DimensionSpec {
            name: name.into(),
            members: codes
                .into_iter()
                .map(|c| DimensionMember { code: c.to_string(), label: c.to_string() })
                .collect(),
        }
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.members.iter().position(|m| m.code == code)
    }
}

/// Single-letter source flags attached to an observation (`b`, `p`, `e`, ...).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Flags(BTreeSet<char>);

impl Flags {
    pub fn new() -> Self {
        Flags::default()
    }

    /// Accepts a run of ASCII letters; anything else yields `None`.
    pub fn parse(text: &str) -> Option<Self> {
        if text.chars().all(|c| c.is_ascii_alphabetic()) {
            Some(Flags(text.chars().collect()))
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, flag: char) -> bool {
        self.0.contains(&flag)
    }

    pub fn insert(&mut self, flag: char) {
        self.0.insert(flag);
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{c}"))
    }
}

impl Serialize for Flags {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Flags {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Flags::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("bad flags `{text}`")))
    }
}

/// A cell value. `value == None` means missing; zero is a present value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "V: Scalar")]
pub struct Observation<V> {
    pub value: Option<V>,
    #[serde(default, skip_serializing_if = "Flags::is_empty")]
    pub flags: Flags,
}

impl<V: Scalar> Observation<V> {
    pub fn present(value: V) -> Self {
        Observation { value: Some(value), flags: Flags::new() }
    }

    pub fn missing() -> Self {
        Observation { value: None, flags: Flags::new() }
    }

    pub fn with_flags(mut self, flags: Flags) -> Self {
        self.flags = flags;
        self
    }

    pub fn is_present(&self) -> bool {
        self.value.is_some()
    }

    pub fn is_missing(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("cube has no areas or no time points")]
    EmptyCube,
    #[error("unknown area `{0}`")]
    UnknownArea(String),
    #[error("unknown dimension member {dimension}={member}")]
    UnknownDimensionMember { dimension: String, member: String },
    #[error("empty time range {from}..{to}")]
    EmptyTimeRange { from: TimeKey, to: TimeKey },
    #[error("invalid cube: {0}")]
    Invalid(String),
}

/// Cell coordinate: member index per dimension, area index, time.
///
/// Ordering follows declaration order, which is also the canonical file order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub members: Vec<usize>,
    pub area: usize,
    pub time: TimeKey,
}

/// A provider dataset normalized to dimensions × areas × times.
///
/// Immutable once built; construct through [`CubeBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube<V> {
    id: String,
    provider: Provider,
    title: String,
    unit: String,
    dimensions: Vec<DimensionSpec>,
    areas: Vec<AreaKey>,
    granularity: Granularity,
    times: Vec<TimeKey>,
    cells: BTreeMap<CellKey, Observation<V>>,
    area_index: HashMap<String, usize>,
}

impl<V: Scalar> DataCube<V> {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn provider(&self) -> Provider {
        self.provider
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn dimensions(&self) -> &[DimensionSpec] {
        &self.dimensions
    }

    pub fn areas(&self) -> &[AreaKey] {
        &self.areas
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn times(&self) -> &[TimeKey] {
        &self.times
    }

    pub fn cells(&self) -> &BTreeMap<CellKey, Observation<V>> {
        &self.cells
    }

    pub fn area(&self, code: &str) -> Option<&AreaKey> {
        self.area_index.get(code).map(|&i| &self.areas[i])
    }

    pub fn area_position(&self, code: &str) -> Option<usize> {
        self.area_index.get(code).copied()
    }

    pub fn time_span(&self) -> Option<(TimeKey, TimeKey)> {
        Some((*self.times.first()?, *self.times.last()?))
    }

    pub fn present_count(&self) -> usize {
        self.cells.values().filter(|o| o.is_present()).count()
    }

    /// Observation at a coordinate given by member codes (in dimension order).
    /// Absent cells read as missing.
    pub fn get(&self, members: &[&str], area: &str, time: TimeKey) -> Option<Observation<V>> {
        if members.len() != self.dimensions.len() {
            return None;
        }
        let members = members
            .iter()
            .zip(&self.dimensions)
            .map(|(code, dim)| dim.position(code))
            .collect::<Option<Vec<_>>>()?;
        let area = self.area_position(area)?;
        if self.times.binary_search(&time).is_err() {
            return None;
        }
        let key = CellKey { members, area, time };
        Some(self.cells.get(&key).cloned().unwrap_or_else(Observation::missing))
    }

    /// Rebuilds the cube under a different provider tag.
    pub fn with_provider(mut self, provider: Provider) -> Self {
        self.provider = provider;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Converts observation values to another scalar type.
    pub fn convert<W: Scalar>(&self) -> DataCube<W> {
        DataCube {
            id: self.id.clone(),
            provider: self.provider,
            title: self.title.clone(),
            unit: self.unit.clone(),
            dimensions: self.dimensions.clone(),
            areas: self.areas.clone(),
            granularity: self.granularity,
            times: self.times.clone(),
            cells: self
                .cells
                .iter()
                .map(|(k, o)| {
                    let value = o.value.and_then(|v| W::parse_decimal(&v.to_decimal()));
                    (k.clone(), Observation { value, flags: o.flags.clone() })
                })
                .collect(),
            area_index: self.area_index.clone(),
        }
    }
}

/// Accumulates cube parts in source order and validates them on [`build`](CubeBuilder::build).
#[derive(Debug, Clone)]
pub struct CubeBuilder<V> {
    id: String,
    provider: Provider,
    title: String,
    unit: String,
    dimensions: Vec<DimensionSpec>,
    areas: Vec<AreaKey>,
    area_index: HashMap<String, usize>,
    times: BTreeSet<TimeKey>,
    cells: BTreeMap<CellKey, Observation<V>>,
}

impl<V: Scalar> CubeBuilder<V> {
    pub fn new(id: impl Into<String>, provider: Provider) -> Self {
        CubeBuilder {
            id: id.into(),
            provider,
            title: String::new(),
            unit: String::new(),
            dimensions: Vec::new(),
            areas: Vec::new(),
            area_index: HashMap::new(),
            times: BTreeSet::new(),
            cells: BTreeMap::new(),
        }
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn set_title(&mut self, title: impl Into<String>) {
        self.title = title.into();
    }

    pub fn set_unit(&mut self, unit: impl Into<String>) {
        self.unit = unit.into();
    }

    pub fn dimension(mut self, spec: DimensionSpec) -> Self {
        self.dimensions.push(spec);
        self
    }

    pub fn add_dimension(&mut self, name: impl Into<String>) -> usize {
        self.dimensions.push(DimensionSpec::new(name));
        self.dimensions.len() - 1
    }

    /// Index of `code` in dimension `dim`, appending it on first appearance.
    pub fn ensure_member(&mut self, dim: usize, code: &str, label: &str) -> usize {
        let spec = &mut self.dimensions[dim];
        match spec.position(code) {
            Some(i) => i,
            None => {
                spec.members.push(DimensionMember { code: code.to_string(), label: label.to_string() });
                spec.members.len() - 1
            }
        }
    }

    pub fn area(mut self, area: AreaKey) -> Self {
        self.ensure_area(area);
        self
    }

    pub fn areas(mut self, areas: impl IntoIterator<Item = AreaKey>) -> Self {
        for area in areas {
            self.ensure_area(area);
        }
        self
    }

    pub fn ensure_area(&mut self, area: AreaKey) -> usize {
        if let Some(&i) = self.area_index.get(&area.code) {
            return i;
        }
        self.area_index.insert(area.code.clone(), self.areas.len());
        self.areas.push(area);
        self.areas.len() - 1
    }

    pub fn times(mut self, times: impl IntoIterator<Item = TimeKey>) -> Self {
        self.times.extend(times);
        self
    }

    pub fn ensure_time(&mut self, time: TimeKey) {
        self.times.insert(time);
    }

    /// Sets a cell by indices. Later writes to the same coordinate win.
    pub fn put(&mut self, members: Vec<usize>, area: usize, time: TimeKey, obs: Observation<V>) {
        self.times.insert(time);
        self.cells.insert(CellKey { members, area, time }, obs);
    }

    /// Sets a cell by codes; dimensions, areas and times must already be declared.
    pub fn set(&mut self, members: &[&str], area: &str, time: TimeKey, obs: Observation<V>) -> Result<(), ModelError> {
        if members.len() != self.dimensions.len() {
            return Err(ModelError::Invalid(format!(
                "cell has {} member codes, cube has {} dimensions",
                members.len(),
                self.dimensions.len()
            )));
        }
        let idx = members
            .iter()
            .zip(&self.dimensions)
            .map(|(code, dim)| {
                dim.position(code).ok_or_else(|| ModelError::UnknownDimensionMember {
                    dimension: dim.name.clone(),
                    member: code.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let area = *self.area_index.get(area).ok_or_else(|| ModelError::UnknownArea(area.to_string()))?;
        if !self.times.contains(&time) {
            return Err(ModelError::Invalid(format!("undeclared time {time}")));
        }
        self.cells.insert(CellKey { members: idx, area, time }, obs);
        Ok(())
    }

    pub fn with(mut self, members: &[&str], area: &str, time: TimeKey, obs: Observation<V>) -> Result<Self, ModelError> {
        self.set(members, area, time, obs)?;
        Ok(self)
    }

    pub fn build(self) -> Result<DataCube<V>, ModelError> {
        let invalid = |msg: String| Err(ModelError::Invalid(msg));
        if self.id.trim().is_empty() {
            return invalid("empty cube id".into());
        }
        let mut dim_names = BTreeSet::new();
        for dim in &self.dimensions {
            if !dim_names.insert(dim.name.as_str()) {
                return invalid(format!("duplicate dimension `{}`", dim.name));
            }
            if dim.members.is_empty() {
                return invalid(format!("dimension `{}` has no members", dim.name));
            }
            let codes: BTreeSet<_> = dim.members.iter().map(|m| m.code.as_str()).collect();
            if codes.len() != dim.members.len() {
                return invalid(format!("dimension `{}` has duplicate members", dim.name));
            }
        }
        for area in &self.areas {
            if area.code.is_empty() || area.label.is_empty() {
                return invalid("area with empty code or label".into());
            }
        }
        let times: Vec<TimeKey> = self.times.into_iter().collect();
        let granularity = match times.first() {
            Some(first) => first.granularity(),
            None => Granularity::Year,
        };
        if let Some(other) = times.iter().find(|t| t.granularity() != granularity) {
            return invalid(format!("mixed granularity: {} and {}", times[0], other));
        }
        for (key, obs) in &self.cells {
            if key.members.len() != self.dimensions.len()
                || key.members.iter().zip(&self.dimensions).any(|(&m, d)| m >= d.members.len())
                || key.area >= self.areas.len()
            {
                return invalid(format!("cell {key:?} outside declared coordinates"));
            }
            if obs.value.is_some_and(|v| !v.is_finite()) {
                return invalid(format!("non-finite value at {key:?}"));
            }
        }
        Ok(DataCube {
            id: self.id,
            provider: self.provider,
            title: self.title,
            unit: self.unit,
            dimensions: self.dimensions,
            areas: self.areas,
            granularity,
            times,
            cells: self.cells,
            area_index: self.area_index,
        })
    }
}

/// One member per extra dimension, a set of areas, and an inclusive time range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    #[serde(default)]
    pub dimension_choice: BTreeMap<String, String>,
    #[serde(default)]
    pub areas: Vec<String>,
    pub time_from: TimeKey,
    pub time_to: TimeKey,
}

impl Selection {
    /// Whether `time` lies inside `[time_from, time_to]` (by period containment).
    pub fn covers(&self, time: &TimeKey) -> bool {
        self.time_from.start_month() <= time.start_month() && time.end_month() <= self.time_to.end_month()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "V: Scalar")]
pub struct SeriesPoint<V> {
    pub time: TimeKey,
    #[serde(flatten)]
    pub observation: Observation<V>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "V: Scalar")]
pub struct Series<V> {
    pub area: String,
    pub label: String,
    pub points: Vec<SeriesPoint<V>>,
}

/// Result of slicing a cube: one chronological series per selected area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "V: Scalar")]
pub struct SeriesSet<V> {
    pub cube_id: String,
    pub title: String,
    pub unit: String,
    pub dimension_choice: BTreeMap<String, String>,
    pub series: Vec<Series<V>>,
}

impl<V: Scalar> SeriesSet<V> {
    pub fn series_for(&self, area: &str) -> Option<&Series<V>> {
        self.series.iter().find(|s| s.area == area)
    }
}

impl<V: Scalar> Series<V> {
    pub fn value_at(&self, time: TimeKey) -> Option<V> {
        self.points.iter().find(|p| p.time == time).and_then(|p| p.observation.value)
    }

    /// First and last present observations.
    pub fn endpoints(&self) -> Option<((TimeKey, V), (TimeKey, V))> {
        let mut present = self.points.iter().filter_map(|p| p.observation.value.map(|v| (p.time, v)));
        let first = present.next()?;
        let last = present.last().unwrap_or(first);
        Some((first, last))
    }
}

/// First member of every dimension, the first [`DEFAULT_AREA_LIMIT`] areas in
/// cube order and the full time range.
pub fn default_selection<V: Scalar>(cube: &DataCube<V>) -> Result<Selection, ModelError> {
    let (time_from, time_to) = cube.time_span().ok_or(ModelError::EmptyCube)?;
    if cube.areas().is_empty() {
        return Err(ModelError::EmptyCube);
    }
    Ok(Selection {
        dimension_choice: cube
            .dimensions()
            .iter()
            .map(|d| (d.name.clone(), d.members[0].code.clone()))
            .collect(),
        areas: cube.areas().iter().take(DEFAULT_AREA_LIMIT).map(|a| a.code.clone()).collect(),
        time_from,
        time_to,
    })
}

/// Resolves a dimension choice to member indices. Dimensions without a choice take their first member.
pub fn resolve_choice<V: Scalar>(
    cube: &DataCube<V>,
    choice: &BTreeMap<String, String>,
) -> Result<(Vec<usize>, BTreeMap<String, String>), ModelError> {
    if let Some(name) = choice.keys().find(|n| !cube.dimensions().iter().any(|d| &d.name == *n)) {
        return Err(ModelError::UnknownDimensionMember {
            dimension: name.clone(),
            member: choice[name].clone(),
        });
    }
    let mut indices = Vec::with_capacity(cube.dimensions().len());
    let mut resolved = BTreeMap::new();
    for dim in cube.dimensions() {
        let idx = match choice.get(&dim.name) {
            Some(code) => dim.position(code).ok_or_else(|| ModelError::UnknownDimensionMember {
                dimension: dim.name.clone(),
                member: code.clone(),
            })?,
            None => 0,
        };
        resolved.insert(dim.name.clone(), dim.members[idx].code.clone());
        indices.push(idx);
    }
    Ok((indices, resolved))
}

/// Restricts a cube to a selection. Every cube time inside the range appears in
/// every series; absent cells come back as missing observations.
pub fn slice<V: Scalar>(cube: &DataCube<V>, sel: &Selection) -> Result<SeriesSet<V>, ModelError> {
    if sel.time_from > sel.time_to {
        return Err(ModelError::EmptyTimeRange { from: sel.time_from, to: sel.time_to });
    }
    let (members, dimension_choice) = resolve_choice(cube, &sel.dimension_choice)?;
    let times: Vec<TimeKey> = cube.times().iter().copied().filter(|t| sel.covers(t)).collect();
    let series = sel
        .areas
        .iter()
        .map(|code| {
            let area = cube.area_position(code).ok_or_else(|| ModelError::UnknownArea(code.clone()))?;
            let points = times
                .iter()
                .map(|&time| {
                    let key = CellKey { members: members.clone(), area, time };
                    let observation = cube.cells().get(&key).cloned().unwrap_or_else(Observation::missing);
                    SeriesPoint { time, observation }
                })
                .collect();
            Ok(Series { area: code.clone(), label: cube.areas()[area].label.clone(), points })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(SeriesSet {
        cube_id: cube.id().to_string(),
        title: cube.title().to_string(),
        unit: cube.unit().to_string(),
        dimension_choice,
        series,
    })
}
