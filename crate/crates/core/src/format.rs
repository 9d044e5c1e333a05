// SPDX-License-Identifier: MIT OR Apache-2.0

//! Stable text formatting for floats written to CSV and JSON.
//!
//! Values are rounded to 12 significant digits and printed in the shortest
//! form that reads back as the rounded value, so identical inputs always
//! produce identical bytes.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to 12 significant digits. Non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    if v == 0.0 {
        return 0.0;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap_or(v)
}

/// Text form of `v` with at most 12 significant digits.
pub fn fmt_f64(v: f64) -> String {
    let r = round_sig(v);
    let a = r.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_values_print_plainly() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(-2.5), "-2.5");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn long_values_keep_twelve_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_f64(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_f64(123456.78901234567), "123456.789012");
        assert_eq!(fmt_f64(1.0 / 3.0 * 1e-7), "3.33333333333e-8");
    }

    #[test]
    fn formatting_is_idempotent() {
        for v in [std::f64::consts::PI, 1e-300, 6.02e23, -1.0 / 7.0] {
            let once = fmt_f64(v);
            let twice = fmt_f64(once.parse().unwrap());
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn json_floats_are_rounded() {
        let s = to_json(&serde_json::json!({"a": 1.0 / 3.0, "n": 7, "v": [0.1, 2.0 / 3.0]})).unwrap();
        assert!(s.contains("0.333333333333"), "{s}");
        assert!(!s.contains("0.3333333333333"), "{s}");
        assert!(s.contains("\"n\": 7"), "{s}");
    }
}
