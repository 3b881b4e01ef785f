//! Eurostat bulk-download TSV.
//!
//! ```text
//! unit,sex,geo\time	2008 	2007
//! PC,T,DE	39.4 	: c
//! ```
//!
//! The first header cell lists the row dimensions joined by commas, the last
//! one being the area, followed by `\time`. Row keys use the same comma
//! layout; data cells are tab-separated and may carry flag letters.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::{cell::normalize_cell_with, decode, id_from_source, IngestError, IngestOptions};
use crate::model::{CubeBuilder, DataCube, Provider};
use crate::scalar::Scalar;
use crate::time::{parse_time_key, Granularity, TimeKey};

/// Dimension names from a header cell like `unit,geo\time`, area dimension last.
pub(crate) fn split_header_cell(cell: &str) -> Option<Vec<String>> {
    let cell = cell.trim();
    let (dims, marker) = cell.rsplit_once('\\')?;
    let marker = marker.trim().to_ascii_lowercase();
    if marker != "time" && marker != "time_period" {
        return None;
    }
    let dims: Vec<String> = dims.split(',').map(|d| d.trim().to_string()).collect();
    if dims.iter().any(String::is_empty) {
        return None;
    }
    Some(dims)
}

pub fn parse_eurostat_tsv<V: Scalar>(bytes: &[u8], source_name: &str) -> Result<Vec<DataCube<V>>, IngestError> {
    parse_eurostat_tsv_with(bytes, source_name, &IngestOptions::default())
}

/// Parses a bulk TSV into one cube per time granularity found in the header.
pub fn parse_eurostat_tsv_with<V: Scalar>(
    bytes: &[u8],
    source_name: &str,
    options: &IngestOptions,
) -> Result<Vec<DataCube<V>>, IngestError> {
    let text = decode(bytes)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| IngestError::MalformedHeader("empty file".into()))?;
    let header: Vec<&str> = header.split('\t').collect();
    let dims = split_header_cell(header[0])
        .ok_or_else(|| IngestError::MalformedHeader(format!("first cell `{}` lacks a \\time marker", header[0])))?;
    if header.len() < 2 {
        return Err(IngestError::NoParseableTimes);
    }
    let times = header[1..]
        .iter()
        .map(|h| parse_time_key(h.trim()).map_err(|e| IngestError::MalformedHeader(e.to_string())))
        .collect::<Result<Vec<TimeKey>, _>>()?;

    let extra_dims = &dims[..dims.len() - 1];
    let hints = &options.hints;
    let base_id = hints.id.clone().unwrap_or_else(|| id_from_source(source_name));
    let provider = hints.provider.unwrap_or(Provider::Eurostat);

    let granularities: BTreeSet<Granularity> = times.iter().map(TimeKey::granularity).collect();
    let split = granularities.len() > 1;
    let mut builders: BTreeMap<Granularity, CubeBuilder<V>> = granularities
        .into_iter()
        .map(|g| {
            let id = if split && g != Granularity::Year { format!("{base_id}_{}", g.as_str()) } else { base_id.clone() };
            let mut b = CubeBuilder::new(id.clone(), provider)
                .title(hints.title.clone().unwrap_or(id))
                .unit(hints.unit.clone().unwrap_or_default());
            for d in extra_dims {
                b.add_dimension(d.clone());
            }
            for t in times.iter().filter(|t| t.granularity() == g) {
                b.ensure_time(*t);
            }
            (g, b)
        })
        .collect();

    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != header.len() {
            return Err(IngestError::RaggedRow { line: line_no + 1, expected: header.len(), found: cells.len() });
        }
        let key: Vec<&str> = cells[0].split(',').map(str::trim).collect();
        if key.len() != dims.len() {
            return Err(IngestError::RaggedRow { line: line_no + 1, expected: dims.len(), found: key.len() });
        }
        let area = options.areas.resolve_code(key[key.len() - 1]);
        for (&granularity, b) in builders.iter_mut() {
            let members: Vec<usize> = key[..key.len() - 1]
                .iter()
                .enumerate()
                .map(|(d, code)| b.ensure_member(d, code, code))
                .collect();
            let area_idx = b.ensure_area(area.clone());
            for (col, (raw, time)) in cells[1..].iter().zip(&times).enumerate() {
                if time.granularity() != granularity {
                    continue;
                }
                let obs = normalize_cell_with(raw, hints.decimal_comma).map_err(|e| IngestError::Cell {
                    row: line_no + 1,
                    column: col + 2,
                    source: Box::new(e),
                })?;
                b.put(members.clone(), area_idx, *time, obs);
            }
        }
    }

    Ok(builders.into_values().map(CubeBuilder::build).collect::<Result<Vec<_>, _>>()?)
}
