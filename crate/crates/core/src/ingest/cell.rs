use crate::ingest::IngestError;
use crate::model::{Flags, Observation};
use crate::scalar::Scalar;

/// Provider spellings of "no value". Compared case-insensitively after trimming.
pub const MISSING_TOKENS: [&str; 7] = ["", ":", "..", "...", "n/a", "NA", "-"];

pub fn is_missing_token(text: &str) -> bool {
    MISSING_TOKENS.iter().any(|t| t.eq_ignore_ascii_case(text))
}

fn is_group_space(c: char) -> bool {
    matches!(c, ' ' | '\u{a0}' | '\u{202f}' | '\u{2009}')
}

/// Splits a trailing flag token (`"5.1 b"` → `("5.1", "b")`, `":c"` → `(":", "c")`).
fn split_flags(text: &str) -> (&str, Option<Flags>) {
    if let Some(pos) = text.rfind(|c: char| c.is_whitespace()) {
        let (core, last) = (text[..pos].trim_end(), &text[pos..].trim_start());
        if !core.is_empty() && !last.is_empty() && !is_missing_token(last) {
            if let Some(flags) = Flags::parse(last) {
                return (core, Some(flags));
            }
        }
    }
    if let Some(rest) = text.strip_prefix(':') {
        if !rest.is_empty() {
            if let Some(flags) = Flags::parse(rest) {
                return (":", Some(flags));
            }
        }
    }
    (text, None)
}

/// Normalizes one provider cell, decimal point convention.
pub fn normalize_cell<V: Scalar>(text: &str) -> Result<Observation<V>, IngestError> {
    normalize_cell_with(text, false)
}

/// Normalizes one provider cell.
///
/// Missing tokens (optionally flag-suffixed) become missing observations.
/// Numbers may carry space thousands grouping, comma grouping when a decimal
/// point is also present, and trailing flag letters after a space. With
/// `decimal_comma`, `.` groups thousands and `,` is the decimal separator.
pub fn normalize_cell_with<V: Scalar>(text: &str, decimal_comma: bool) -> Result<Observation<V>, IngestError> {
    let text = text.trim();
    if is_missing_token(text) {
        return Ok(Observation::missing());
    }
    let (core, flags) = split_flags(text);
    let flags = flags.unwrap_or_default();
    if is_missing_token(core) {
        return Ok(Observation::missing().with_flags(flags));
    }
    let mut digits: String = core.chars().filter(|c| !is_group_space(*c)).collect();
    if decimal_comma {
        digits = digits.replace('.', "").replace(',', ".");
    } else if digits.contains('.') && digits.contains(',') {
        digits = digits.replace(',', "");
    }
    match V::parse_decimal(&digits) {
        Some(value) => Ok(Observation::present(value).with_flags(flags)),
        None => Err(IngestError::UnparseableNumber(text.to_string())),
    }
}
