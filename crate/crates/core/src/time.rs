//! Granularity-tagged time points.
//!
//! Providers spell periods in several ways (`2008`, `2008Q1`, `2008-Q1`,
//! `2008M03`, `2008-03`). Everything is normalized to a [`TimeKey`] whose
//! canonical rendering is `YYYY`, `YYYY-Qn` or `YYYY-mm`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Quarter,
    Month,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Year => "year",
            Granularity::Quarter => "quarter",
            Granularity::Month => "month",
        }
    }

    /// Length of one period in months.
    pub fn months(self) -> u32 {
        match self {
            Granularity::Year => 12,
            Granularity::Quarter => 3,
            Granularity::Month => 1,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "year" => Ok(Granularity::Year),
            "quarter" => Ok(Granularity::Quarter),
            "month" => Ok(Granularity::Month),
            other => Err(TimeError::Unparseable(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("unparseable time `{0}`")]
    Unparseable(String),
    #[error("time `{0}` out of range")]
    OutOfRange(String),
}

/// A year, quarter or month.
///
/// `sub` is 0 for years, 1..=4 for quarters and 1..=12 for months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeKey {
    granularity: Granularity,
    year: i32,
    sub: u8,
}

impl TimeKey {
    pub fn new(granularity: Granularity, year: i32, sub: u8) -> Result<Self, TimeError> {
        let key = TimeKey { granularity, year, sub };
        let sub_ok = match granularity {
            Granularity::Year => sub == 0,
            Granularity::Quarter => (1..=4).contains(&sub),
            Granularity::Month => (1..=12).contains(&sub),
        };
        if !sub_ok || !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(TimeError::OutOfRange(format!("{granularity}:{year}:{sub}")));
        }
        Ok(key)
    }

    pub fn year(year: i32) -> Result<Self, TimeError> {
        Self::new(Granularity::Year, year, 0)
    }

    pub fn quarter(year: i32, quarter: u8) -> Result<Self, TimeError> {
        Self::new(Granularity::Quarter, year, quarter)
    }

    pub fn month(year: i32, month: u8) -> Result<Self, TimeError> {
        Self::new(Granularity::Month, year, month)
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn year_value(&self) -> i32 {
        self.year
    }

    pub fn sub(&self) -> u8 {
        self.sub
    }

    /// First month of the period as an absolute month index (`year * 12 + month0`).
    pub fn start_month(&self) -> i64 {
        let month0 = match self.granularity {
            Granularity::Year => 0,
            Granularity::Quarter => (self.sub as i64 - 1) * 3,
            Granularity::Month => self.sub as i64 - 1,
        };
        self.year as i64 * 12 + month0
    }

    /// Last month of the period (inclusive), same indexing as [`start_month`](Self::start_month).
    pub fn end_month(&self) -> i64 {
        self.start_month() + self.granularity.months() as i64 - 1
    }

    /// Whether this period covers `other` entirely.
    pub fn contains(&self, other: &TimeKey) -> bool {
        time_contains(self, other)
    }

    /// Canonical text: `YYYY`, `YYYY-Qn` or `YYYY-mm`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.granularity {
            Granularity::Year => write!(f, "{:04}", self.year),
            Granularity::Quarter => write!(f, "{:04}-Q{}", self.year, self.sub),
            Granularity::Month => write!(f, "{:04}-{:02}", self.year, self.sub),
        }
    }
}

/// Chronological by period start, then coarser periods first.
impl Ord for TimeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.start_month()
            .cmp(&other.start_month())
            .then_with(|| other.end_month().cmp(&self.end_month()))
    }
}

impl PartialOrd for TimeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for TimeKey {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_time_key(s)
    }
}

impl Serialize for TimeKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_time_key(&text).map_err(serde::de::Error::custom)
    }
}

fn digits(bytes: &[u8]) -> Option<u32> {
    if bytes.is_empty() || !bytes.iter().all(u8::is_ascii_digit) {
        return None;
    }
    bytes.iter().try_fold(0u32, |acc, b| acc.checked_mul(10)?.checked_add((b - b'0') as u32))
}

/// Parses `YYYY`, `YYYYQn`, `YYYY-Qn`, `YYYYMmm` and `YYYY-mm`.
pub fn parse_time_key(text: &str) -> Result<TimeKey, TimeError> {
    let bytes = text.as_bytes();
    let unparseable = || TimeError::Unparseable(text.to_string());
    if bytes.len() < 4 {
        return Err(unparseable());
    }
    let year = digits(&bytes[..4]).ok_or_else(unparseable)? as i32;
    let rest = &bytes[4..];
    let (granularity, sub) = match rest {
        [] => (Granularity::Year, 0),
        [b'Q', q] | [b'-', b'Q', q] => (Granularity::Quarter, digits(&[*q]).ok_or_else(unparseable)?),
        [b'M', m1, m2] | [b'-', m1, m2] => {
            (Granularity::Month, digits(&[*m1, *m2]).ok_or_else(unparseable)?)
        }
        _ => return Err(unparseable()),
    };
    let sub = u8::try_from(sub).map_err(|_| TimeError::OutOfRange(text.to_string()))?;
    TimeKey::new(granularity, year, sub).map_err(|_| TimeError::OutOfRange(text.to_string()))
}

/// True iff `coarse`'s period is a superset of `fine`'s.
pub fn time_contains(coarse: &TimeKey, fine: &TimeKey) -> bool {
    coarse.start_month() <= fine.start_month() && fine.end_month() <= coarse.end_month()
}

/// Whether two keys refer to overlapping-by-containment periods in either direction.
pub fn times_match(a: &TimeKey, b: &TimeKey) -> bool {
    time_contains(a, b) || time_contains(b, a)
}
