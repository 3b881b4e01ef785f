//! Wide tables: one axis holds areas, the other holds time labels.

use crate::ingest::{
    cell::normalize_cell_with, decode, id_from_source, IngestError, IngestOptions, Orientation, ProviderHints,
    TIME_HEADER_THRESHOLD,
};
use crate::model::{CubeBuilder, DataCube, Provider};
use crate::scalar::Scalar;
use crate::time::{parse_time_key, TimeKey};

/// Delimited text after preamble extraction. Rows are padded to equal width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub rows: Vec<Vec<String>>,
    pub source_name: String,
    pub delimiter: char,
    /// `#key: value` lines preceding the header.
    pub preamble: Vec<(String, String)>,
}

impl RawTable {
    pub fn new(rows: Vec<Vec<String>>, source_name: impl Into<String>, delimiter: char) -> Self {
        let mut table = RawTable { rows, source_name: source_name.into(), delimiter, preamble: Vec::new() };
        table.pad();
        table
    }

    pub fn from_strs(rows: &[&[&str]]) -> Self {
        RawTable::new(
            rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
            "table",
            ',',
        )
    }

    pub fn width(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn pad(&mut self) {
        let width = self.width();
        for row in &mut self.rows {
            row.resize(width, String::new());
        }
    }

    pub fn preamble_value(&self, key: &str) -> Option<&str> {
        self.preamble.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn transpose(table: &RawTable) -> RawTable {
    let width = table.width();
    let rows = (0..width)
        .map(|c| table.rows.iter().map(|r| r.get(c).cloned().unwrap_or_default()).collect())
        .collect();
    RawTable { rows, source_name: table.source_name.clone(), delimiter: table.delimiter, preamble: table.preamble.clone() }
}

fn sniff_delimiter(line: &str) -> char {
    [',', ';', '\t']
        .into_iter()
        .max_by_key(|d| line.matches(*d).count())
        .filter(|d| line.contains(*d))
        .unwrap_or(',')
}

/// Reads delimited text. Leading `#key: value` lines become the preamble.
pub fn read_table(bytes: &[u8], source_name: &str) -> Result<RawTable, IngestError> {
    let text = decode(bytes)?;
    let mut preamble = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                preamble.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
            body_start += line.len();
        } else if trimmed.is_empty() {
            body_start += line.len();
        } else {
            break;
        }
    }
    let body = &text[body_start..];
    let delimiter = sniff_delimiter(body.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter as u8)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    let mut table = RawTable::new(rows, source_name, delimiter);
    table.preamble = preamble;
    Ok(table)
}

fn time_score<'a>(cells: impl Iterator<Item = &'a String>) -> f64 {
    let (mut total, mut hits) = (0usize, 0usize);
    for cell in cells {
        total += 1;
        if parse_time_key(cell.trim()).is_ok() {
            hits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn detect_orientation(table: &RawTable) -> Orientation {
    detect_orientation_with(table, TIME_HEADER_THRESHOLD)
}

/// Compares the share of time-like cells in the header row and the header column
/// (corner excluded). The winning axis must beat `threshold` strictly.
pub fn detect_orientation_with(table: &RawTable, threshold: f64) -> Orientation {
    let columns = table.rows.first().map(|r| time_score(r.iter().skip(1))).unwrap_or(0.0);
    let rows = time_score(table.rows.iter().skip(1).filter_map(|r| r.first()));
    if columns > rows && columns > threshold {
        Orientation::TimesInColumns
    } else if rows > columns && rows > threshold {
        Orientation::TimesInRows
    } else {
        Orientation::Ambiguous
    }
}

pub fn parse_wide_table<V: Scalar>(table: &RawTable, hints: Option<&ProviderHints>) -> Result<DataCube<V>, IngestError> {
    let options = IngestOptions::with_hints(hints.cloned().unwrap_or_default());
    parse_wide_table_with(table, &options)
}

/// Builds a two-axis cube (areas × times). Header cells on the time axis that
/// are not time labels mark non-data columns and are skipped.
pub(crate) fn parse_wide_table_with<V: Scalar>(table: &RawTable, options: &IngestOptions) -> Result<DataCube<V>, IngestError> {
    let hints = &options.hints;
    let orientation = match hints.orientation {
        Some(o) if o != Orientation::Ambiguous => o,
        _ => detect_orientation_with(table, options.time_header_threshold),
    };
    let table = match orientation {
        Orientation::TimesInColumns => std::borrow::Cow::Borrowed(table),
        Orientation::TimesInRows => std::borrow::Cow::Owned(transpose(table)),
        Orientation::Ambiguous => return Err(IngestError::AmbiguousOrientation),
    };
    let header = table.rows.first().ok_or(IngestError::EmptyBody)?;
    let time_columns: Vec<(usize, TimeKey)> = header
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(i, h)| parse_time_key(h.trim()).ok().map(|t| (i, t)))
        .collect();
    let Some(&(_, first_time)) = time_columns.first() else {
        return Err(IngestError::NoParseableTimes);
    };
    if time_columns.iter().any(|(_, t)| t.granularity() != first_time.granularity()) {
        return Err(IngestError::MixedGranularity);
    }

    let preamble = |key: &str| table.preamble_value(key).map(str::to_string);
    let id = hints.id.clone().unwrap_or_else(|| id_from_source(&table.source_name));
    let provider = hints
        .provider
        .or_else(|| preamble("provider").and_then(|p| p.parse().ok()))
        .unwrap_or(Provider::User);
    let mut builder = CubeBuilder::<V>::new(id.clone(), provider)
        .title(hints.title.clone().or_else(|| preamble("title")).unwrap_or(id))
        .unit(hints.unit.clone().or_else(|| preamble("unit")).unwrap_or_default())
        .times(time_columns.iter().map(|(_, t)| *t));

    let mut body_rows = 0;
    for (r, row) in table.rows.iter().enumerate().skip(1) {
        let label = row[0].trim();
        if label.is_empty() {
            continue;
        }
        body_rows += 1;
        let area = builder.ensure_area(options.areas.resolve_label(label));
        for &(c, time) in &time_columns {
            let obs = normalize_cell_with(&row[c], hints.decimal_comma).map_err(|e| {
                let (row, column) = match orientation {
                    Orientation::TimesInRows => (c + 1, r + 1),
                    _ => (r + 1, c + 1),
                };
                IngestError::Cell { row, column, source: Box::new(e) }
            })?;
            builder.put(Vec::new(), area, time, obs);
        }
    }
    if body_rows == 0 {
        return Err(IngestError::EmptyBody);
    }
    Ok(builder.build()?)
}
