//! Canonical JSON text: sorted object keys, two-space indentation, scalar
//! arrays on one line, and every float written with 17 significant digits.

use serde_json::{Number, Value};

/// A float value; non-finite numbers become `null`.
pub fn num(x: f64) -> Value {
    let x = if x == 0.0 { 0.0 } else { x };
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Canonical rendering, terminated by a newline.
pub fn to_canonical(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_number(n: &Number, out: &mut String) {
    if n.is_f64() {
        let x = n.as_f64().unwrap_or(0.0);
        out.push_str(&format!("{x:.16e}"));
    } else {
        out.push_str(&n.to_string());
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(item, level, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                indent(level + 1, out);
                write_value(item, level + 1, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&serde_json::to_string(key).expect("key encodes"));
                out.push_str(": ");
                write_value(&map[*key], level + 1, out);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1, "a": [num(0.5), num(-0.0)], "c": {"z": true, "y": null}});
        let s = to_canonical(&v);
        assert_eq!(
            s,
            "{\n  \"a\": [5.0000000000000000e-1, 0.0000000000000000e0],\n  \"b\": 1,\n  \"c\": {\n    \"y\": null,\n    \"z\": true\n  }\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0].as_f64(), Some(0.5));
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = to_canonical(&num(x));
            let back: f64 = serde_json::from_str(s.trim()).unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
