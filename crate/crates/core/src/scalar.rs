use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Numeric type observations are stored in.
///
/// Implemented for `f32` and `f64`. Canonical files always carry decimal
/// text, so the in-memory precision only matters for arithmetic done by
/// consumers; parsing and rendering go through `FromStr` and `Display`,
/// which round-trip the shortest decimal representation.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + Debug
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Parses plain decimal text (`-12.5`, `1e3`). Rejects `inf`/`nan` spellings.
    fn parse_decimal(text: &str) -> Option<Self> {
        let ok = !text.is_empty()
            && text
                .bytes()
                .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
            && text.bytes().any(|b| b.is_ascii_digit());
        if !ok {
            return None;
        }
        text.parse::<Self>().ok().filter(|v| v.is_finite())
    }

    /// Decimal text used in canonical files and display values.
    fn to_decimal(self) -> String {
        if self.is_zero() {
            // normalizes -0
            return "0".to_string();
        }
        format!("{self}")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
