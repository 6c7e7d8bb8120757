//! Canonical JSON output shared by every file format this crate writes.
//!
//! Canonical form: object keys sorted lexicographically, no insignificant
//! whitespace, floats in shortest round-trip decimal form, one trailing
//! newline. Non-finite reals have no JSON number form and are written as the
//! strings `"Infinity"` / `"-Infinity"`; NaN becomes `null`.

use serde_json::{Number, Value};

pub const POS_INF: &str = "Infinity";
pub const NEG_INF: &str = "-Infinity";

/// Serializes `value` canonically, newline-terminated.
pub fn to_canonical_bytes(value: &Value) -> Vec<u8> {
    // serde_json's default map is ordered by key, which gives the sorted
    // layout directly.
    let mut out = serde_json::to_vec(value).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

pub fn real(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(Number::from_f64(v).expect("finite"))
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        Value::String(POS_INF.into())
    } else {
        Value::String(NEG_INF.into())
    }
}

pub fn opt_real(v: Option<f64>) -> Value {
    v.map_or(Value::Null, real)
}

/// Inverse of [`real`]: numbers and the two infinity spellings.
pub fn parse_real(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == POS_INF => Some(f64::INFINITY),
        Value::String(s) if s == NEG_INF => Some(f64::NEG_INFINITY),
        _ => None,
    }
}
