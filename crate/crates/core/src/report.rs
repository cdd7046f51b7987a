//! Text serialisation with full-precision reals: every non-integer number is
//! written with 17 significant digits, non-finite values as `null`.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// `x` with 17 significant digits in scientific notation; empty if non-finite.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                match n.as_f64() {
                    Some(f) if f.is_finite() => out.push_str(&format!("{f:.16e}")),
                    _ => out.push_str("null"),
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // scalars stay on one line
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Pretty JSON with sorted keys and 17-significant-digit reals.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Internal(format!("serialising report: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reals_keep_seventeen_digits() {
        let s = to_json_string(&json!({"b": 0.1, "a": [1, 2.5], "c": null, "d": "x\"y"})).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 0.1);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("[1, 2.5000000000000000e0]"), "{s}");
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
    }

    #[test]
    fn round_trips_exactly() {
        for x in [std::f64::consts::PI, 1e-300, -123456.789, 2f64.powi(60) + 0.5] {
            let s = to_json_string(&vec![x]).unwrap();
            let token = s.trim().trim_start_matches('[').trim_end_matches(']');
            assert_eq!(token, format_real(x));
            assert_eq!(token.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_real(f64::NAN), "");
    }

    #[test]
    fn non_finite_is_null() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        assert_eq!(to_json_string(&S { x: f64::NAN }).unwrap(), "{\n  \"x\": null\n}\n");
    }
}
