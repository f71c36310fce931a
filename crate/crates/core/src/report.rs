//! Canonical JSON for reports: sorted keys and floats rounded to 12
//! significant digits, so equal inputs give byte-identical output.

use serde::Serialize;
use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn canonicalise(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalise).collect()),
        // serde_json maps are ordered by key
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalise(v))).collect()),
        other => other,
    }
}

pub fn to_canonical_value<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    Ok(canonicalise(serde_json::to_value(value)?))
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&to_canonical_value(value)?)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_significant(0.1 + 0.2), 0.3);
        assert_eq!(round_significant(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_significant(-2.5e-17), -2.5e-17);
        assert_eq!(round_significant(0.0), 0.0);
    }

    #[test]
    fn keys_are_sorted_regardless_of_insertion() {
        let mut a = HashMap::new();
        let mut b = HashMap::new();
        for (k, v) in [("z", 1.0), ("a", 0.1 + 0.2), ("m", 2.0)] {
            a.insert(k, v);
        }
        for (k, v) in [("m", 2.0), ("z", 1.0), ("a", 0.3)] {
            b.insert(k, v);
        }
        let sa = to_canonical_string(&a).unwrap();
        assert_eq!(sa, to_canonical_string(&b).unwrap());
        assert!(sa.find("\"a\"").unwrap() < sa.find("\"z\"").unwrap());
    }
}
