//! Provider file ingestion: format sniffing, Eurostat bulk TSV, wide tables.

mod cell;
mod eurostat;
mod wide;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cell::{is_missing_token, normalize_cell, normalize_cell_with, MISSING_TOKENS};
pub use eurostat::{parse_eurostat_tsv, parse_eurostat_tsv_with};
pub use wide::{detect_orientation, detect_orientation_with, parse_wide_table, read_table, transpose, RawTable};

use crate::areas::AreaTable;
use crate::canonical::{looks_canonical, parse_canonical, CanonicalError};
use crate::model::{DataCube, ModelError, Provider};
use crate::scalar::Scalar;

/// Fraction of header cells that must parse as times for an axis to count as the time axis.
pub const TIME_HEADER_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    TimesInColumns,
    TimesInRows,
    Ambiguous,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::TimesInColumns => Orientation::TimesInRows,
            Orientation::TimesInRows => Orientation::TimesInColumns,
            Orientation::Ambiguous => Orientation::Ambiguous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    EurostatTsv,
    WideTable,
    CanonicalCube,
    Unknown,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not UTF-8 text")]
    NotText,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("no parseable time labels")]
    NoParseableTimes,
    #[error("cannot tell whether times run along rows or columns")]
    AmbiguousOrientation,
    #[error("table has no data rows")]
    EmptyBody,
    #[error("time axis mixes granularities")]
    MixedGranularity,
    #[error("unparseable number `{0}`")]
    UnparseableNumber(String),
    #[error("row {row}, column {column}: {source}")]
    Cell {
        row: usize,
        column: usize,
        #[source]
        source: Box<IngestError>,
    },
    #[error("unrecognized file format")]
    UnknownFormat,
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Metadata supplied alongside a file. Set fields override preamble lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderHints {
    pub id: Option<String>,
    pub title: Option<String>,
    pub unit: Option<String>,
    pub provider: Option<Provider>,
    pub orientation: Option<Orientation>,
    pub decimal_comma: bool,
}

/// Ingestion settings shared by the parsers.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub hints: ProviderHints,
    pub areas: AreaTable,
    pub time_header_threshold: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            hints: ProviderHints::default(),
            areas: AreaTable::default(),
            time_header_threshold: TIME_HEADER_THRESHOLD,
        }
    }
}

impl IngestOptions {
    pub fn with_hints(hints: ProviderHints) -> Self {
        IngestOptions { hints, ..Default::default() }
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<&str, IngestError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::NotText)?;
    if text.chars().any(|c| c.is_control() && !matches!(c, '\n' | '\r' | '\t')) {
        return Err(IngestError::NotText);
    }
    Ok(text)
}

/// Cube id derived from a file name: the stem, lowercased.
pub fn id_from_source(source_name: &str) -> String {
    let stem = Path::new(source_name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(source_name);
    let stem = stem.strip_suffix(".expected").unwrap_or(stem);
    let id: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c.to_ascii_lowercase() } else { '_' })
        .collect();
    if id.is_empty() {
        "cube".to_string()
    } else {
        id
    }
}

pub(crate) fn is_eurostat_header(first_cell: &str) -> bool {
    eurostat::split_header_cell(first_cell).is_some()
}

/// Classifies a byte buffer.
pub fn sniff_format(bytes: &[u8]) -> Result<FormatKind, IngestError> {
    let text = decode(bytes)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return Ok(if looks_canonical(trimmed.as_bytes()) { FormatKind::CanonicalCube } else { FormatKind::Unknown });
    }
    let first = text.lines().map(str::trim_end).find(|l| !l.is_empty() && !l.starts_with('#'));
    let Some(first) = first else { return Ok(FormatKind::Unknown) };
    if is_eurostat_header(first.split('\t').next().unwrap_or("")) {
        return Ok(FormatKind::EurostatTsv);
    }
    match read_table(text.as_bytes(), "sniff") {
        Ok(table) if table.rows.len() >= 2 && table.width() >= 2 => {
            Ok(match detect_orientation(&table) {
                Orientation::Ambiguous => FormatKind::Unknown,
                _ => FormatKind::WideTable,
            })
        }
        _ => Ok(FormatKind::Unknown),
    }
}

/// Sniffs and parses a provider file into cubes.
pub fn ingest_bytes<V: Scalar>(
    bytes: &[u8],
    source_name: &str,
    options: &IngestOptions,
) -> Result<Vec<DataCube<V>>, IngestError> {
    match sniff_format(bytes)? {
        FormatKind::EurostatTsv => parse_eurostat_tsv_with(bytes, source_name, options),
        FormatKind::WideTable => {
            let table = read_table(bytes, source_name)?;
            Ok(vec![wide::parse_wide_table_with(&table, options)?])
        }
        FormatKind::CanonicalCube => {
            let mut cube: DataCube<V> = parse_canonical(bytes)?;
            if let Some(p) = options.hints.provider {
                cube = cube.with_provider(p);
            }
            Ok(vec![cube])
        }
        FormatKind::Unknown => Err(IngestError::UnknownFormat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sniffs_formats() {
        assert_eq!(sniff_format(b"unit,sex,geo\\time\t2007\t2008\nPC,T,DE\t1\t2\n").unwrap(), FormatKind::EurostatTsv);
        assert_eq!(sniff_format(b"geo\\time\t2007 \nDE\t1 \n").unwrap(), FormatKind::EurostatTsv);
        let canonical = br#"{"id":"x","provider":"user","title":"","unit":"","dimensions":[],"areas":[],"granularity":"year","times":[],"cells":[]}"#;
        assert_eq!(sniff_format(canonical).unwrap(), FormatKind::CanonicalCube);
        assert_eq!(sniff_format(b"{\"id\": 3}").unwrap(), FormatKind::Unknown);
        assert_eq!(sniff_format(b"Country,1990,1991\nUSA,1,2\n").unwrap(), FormatKind::WideTable);
        assert_eq!(sniff_format(b"Year;USA;GBR\n1990;1;2\n1991;3;4\n").unwrap(), FormatKind::WideTable);
        assert_eq!(sniff_format(b"#title: x\nCountry,2001\nUSA,1\n").unwrap(), FormatKind::WideTable);
        assert_eq!(sniff_format(b"a,b\nc,d\n").unwrap(), FormatKind::Unknown);
        assert_eq!(sniff_format(b"").unwrap(), FormatKind::Unknown);
    }

    #[test]
    fn binary_is_not_text() {
        let bytes: Vec<u8> = (0..=255u8).cycle().skip(7).take(512).collect();
        assert!(matches!(sniff_format(&bytes), Err(IngestError::NotText)));
        assert!(matches!(sniff_format(b"abc\0def"), Err(IngestError::NotText)));
    }

    #[test]
    fn bom_is_tolerated() {
        assert_eq!(sniff_format(b"\xEF\xBB\xBFCountry,1990\nUSA,1\n").unwrap(), FormatKind::WideTable);
    }

    #[test]
    fn ids_from_names() {
        assert_eq!(id_from_source("data/GDP per capita.csv"), "gdp_per_capita");
        assert_eq!(id_from_source("tps00001.tsv"), "tps00001");
    }
}
