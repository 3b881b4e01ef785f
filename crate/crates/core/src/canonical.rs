//! The canonical on-disk cube format: one UTF-8 JSON document per cube.
//!
//! Top-level fields, in this order: `id`, `provider`, `title`, `unit`,
//! `dimensions`, `areas`, `granularity`, `times`, `cells`. Each cell is
//! `[memberTuple, areaCode, timeText, valueText|null, flags]`. The writer is
//! deterministic (cells in coordinate order, one per line) so rewriting a
//! canonical file reproduces it byte for byte.

use serde::Deserialize;
use thiserror::Error;

use crate::model::{AreaKey, CubeBuilder, DataCube, DimensionSpec, Flags, ModelError, Observation, Provider};
use crate::scalar::Scalar;
use crate::time::{parse_time_key, Granularity, TimeError};

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("not a canonical cube document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad time in canonical cube: {0}")]
    Time(#[from] TimeError),
    #[error("bad value `{0}` in canonical cube")]
    Value(String),
    #[error("granularity `{declared}` does not match time `{time}`")]
    Granularity { declared: Granularity, time: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCube {
    id: String,
    provider: Provider,
    title: String,
    unit: String,
    dimensions: Vec<DimensionSpec>,
    areas: Vec<AreaKey>,
    granularity: Granularity,
    times: Vec<String>,
    cells: Vec<CellRow>,
}

/// Members, area, time, value, flags.
type CellRow = (Vec<String>, String, String, Option<String>, String);

fn json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("serializing plain data cannot fail")
}

fn push_list(out: &mut String, name: &str, items: &[String], last: bool) {
    out.push_str(&format!("  {}: ", json(name)));
    if items.is_empty() {
        out.push_str("[]");
    } else {
        out.push_str("[\n");
        for (i, item) in items.iter().enumerate() {
            out.push_str("    ");
            out.push_str(item);
            if i + 1 < items.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]");
    }
    out.push_str(if last { "\n" } else { ",\n" });
}

/// Renders a cube in canonical form.
pub fn write_canonical<V: Scalar>(cube: &DataCube<V>) -> Vec<u8> {
    let mut out = String::from("{\n");
    for (name, value) in [
        ("id", cube.id()),
        ("provider", cube.provider().as_str()),
        ("title", cube.title()),
        ("unit", cube.unit()),
    ] {
        out.push_str(&format!("  {}: {},\n", json(name), json(value)));
    }
    let dims: Vec<String> = cube.dimensions().iter().map(json).collect();
    push_list(&mut out, "dimensions", &dims, false);
    let areas: Vec<String> = cube.areas().iter().map(json).collect();
    push_list(&mut out, "areas", &areas, false);
    out.push_str(&format!("  \"granularity\": {},\n", json(cube.granularity().as_str())));
    let times: Vec<String> = cube.times().iter().map(|t| t.to_string()).collect();
    out.push_str(&format!("  \"times\": {},\n", json(&times)));
    let cells: Vec<String> = cube
        .cells()
        .iter()
        .map(|(key, obs)| {
            let members: Vec<&str> = key
                .members
                .iter()
                .zip(cube.dimensions())
                .map(|(&m, d)| d.members[m].code.as_str())
                .collect();
            let value = obs.value.map(Scalar::to_decimal);
            json(&(
                members,
                &cube.areas()[key.area].code,
                key.time.to_string(),
                value,
                obs.flags.to_string(),
            ))
        })
        .collect();
    push_list(&mut out, "cells", &cells, true);
    out.push_str("}\n");
    out.into_bytes()
}

/// Parses a canonical cube document.
pub fn parse_canonical<V: Scalar>(bytes: &[u8]) -> Result<DataCube<V>, CanonicalError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let raw: RawCube = serde_json::from_slice(bytes)?;
    let times = raw
        .times
        .iter()
        .map(|t| {
            let key = parse_time_key(t)?;
            if key.granularity() != raw.granularity {
                return Err(CanonicalError::Granularity { declared: raw.granularity, time: t.clone() });
            }
            Ok(key)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut builder = CubeBuilder::<V>::new(raw.id, raw.provider)
        .title(raw.title)
        .unit(raw.unit)
        .areas(raw.areas)
        .times(times);
    for dim in raw.dimensions {
        builder = builder.dimension(dim);
    }
    for (members, area, time, value, flags) in raw.cells {
        let time = parse_time_key(&time)?;
        let value = match value {
            Some(text) => Some(V::parse_decimal(&text).ok_or(CanonicalError::Value(text))?),
            None => None,
        };
        let flags = Flags::parse(&flags).ok_or(CanonicalError::Value(flags))?;
        let members: Vec<&str> = members.iter().map(String::as_str).collect();
        builder.set(&members, &area, time, Observation { value, flags })?;
    }
    Ok(builder.build()?)
}

/// Cheap structural check used by format sniffing.
pub fn looks_canonical(bytes: &[u8]) -> bool {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    match serde_json::from_slice::<serde_json::Value>(bytes) {
        Ok(serde_json::Value::Object(map)) => {
            ["id", "provider", "title", "unit", "dimensions", "areas", "granularity", "times", "cells"]
                .iter()
                .all(|k| map.contains_key(*k))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeKey;

    fn cube() -> DataCube<f64> {
        CubeBuilder::new("tps00001", Provider::Eurostat)
            .title("Population \"on\" 1 January")
            .unit("persons")
            .dimension(DimensionSpec::with_members("unit", ["NR"]))
            .areas([
                AreaKey { code: "DEU".into(), label: "Germany".into() },
                AreaKey { code: "FRA".into(), label: "France".into() },
            ])
            .times([TimeKey::year(2007).unwrap(), TimeKey::year(2008).unwrap()])
            .with(&["NR"], "DEU", TimeKey::year(2007).unwrap(), Observation::present(8231490.0))
            .unwrap()
            .with(
                &["NR"],
                "FRA",
                TimeKey::year(2008).unwrap(),
                Observation::missing().with_flags(Flags::parse("c").unwrap()),
            )
            .unwrap()
            .with(&["NR"], "DEU", TimeKey::year(2008).unwrap(), Observation::present(0.25))
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn writes_expected_layout() {
        let text = String::from_utf8(write_canonical(&cube())).unwrap();
        let expected = r#"{
  "id": "tps00001",
  "provider": "eurostat",
  "title": "Population \"on\" 1 January",
  "unit": "persons",
  "dimensions": [
    {"name":"unit","members":[{"code":"NR","label":"NR"}]}
  ],
  "areas": [
    {"code":"DEU","label":"Germany"},
    {"code":"FRA","label":"France"}
  ],
  "granularity": "year",
  "times": ["2007","2008"],
  "cells": [
    [["NR"],"DEU","2007","8231490",""],
    [["NR"],"DEU","2008","0.25",""],
    [["NR"],"FRA","2008",null,"c"]
  ]
}
"#;
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trips() {
        let c = cube();
        let bytes = write_canonical(&c);
        let parsed: DataCube<f64> = parse_canonical(&bytes).unwrap();
        assert_eq!(parsed, c);
        assert_eq!(write_canonical(&parsed), bytes);
        let as_f32: DataCube<f32> = parse_canonical(&bytes).unwrap();
        assert_eq!(write_canonical(&as_f32), bytes);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_cells() {
        let text = String::from_utf8(write_canonical(&cube())).unwrap();
        let extra = text.replacen("\"id\"", "\"extra\": 1,\n  \"id\"", 1);
        assert!(parse_canonical::<f64>(extra.as_bytes()).is_err());
        let bad_area = text.replace("\"FRA\",\"2008\"", "\"ITA\",\"2008\"");
        assert!(matches!(parse_canonical::<f64>(bad_area.as_bytes()), Err(CanonicalError::Model(_))));
        let bad_value = text.replace("\"0.25\"", "\"abc\"");
        assert!(matches!(parse_canonical::<f64>(bad_value.as_bytes()), Err(CanonicalError::Value(_))));
        let bad_gran = text.replace("\"granularity\": \"year\"", "\"granularity\": \"month\"");
        assert!(matches!(parse_canonical::<f64>(bad_gran.as_bytes()), Err(CanonicalError::Granularity { .. })));
    }

    #[test]
    fn sniff_helper() {
        assert!(looks_canonical(&write_canonical(&cube())));
        assert!(!looks_canonical(b"{\"id\": 1}"));
        assert!(!looks_canonical(b"a,b\n1,2"));
    }
}
