//! Statistical data cubes and coordinated-view linking.
//!
//! Provider files (Eurostat bulk TSV, wide CSV in either orientation,
//! canonical cube JSON) are ingested into [`DataCube`]s, registered in a
//! [`catalog::Catalog`], sliced into [`SeriesSet`]s and composed into
//! dashboards whose visualizations are linked by (area, time), by label, or
//! by manual rules.

pub mod areas;
pub mod canonical;
pub mod catalog;
pub mod dashboard;
pub mod fixtures;
pub mod ingest;
pub mod link;
pub mod model;
pub mod scalar;
pub mod sources;
pub mod storage;
pub mod time;

pub use model::{
    default_selection, slice, AreaKey, DimensionSpec, Flags, ModelError, Observation, Provider, Selection,
};
pub use scalar::Scalar;
pub use time::{parse_time_key, time_contains, Granularity, TimeKey};

/// Cube with double-precision observations; what the catalog and dashboards use.
pub type DataCube = model::DataCube<f64>;
/// Single-precision cube, for memory-bound bulk work.
pub type DataCube32 = model::DataCube<f32>;
pub type CubeBuilder = model::CubeBuilder<f64>;
pub type SeriesSet = model::SeriesSet<f64>;
pub type Series = model::Series<f64>;
pub type Obs = model::Observation<f64>;
