//! Helpers shared by the JSON reports.

use serde_json::Value;

pub const SCHEMA_VERSION: u64 = 1;

/// Decimal string with 17 significant digits.
pub fn num17(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

pub fn num_value(x: f64) -> Value {
    Value::String(num17(x))
}

/// Wraps a report body with the schema field first.
pub fn with_schema(kind: &str, body: Value) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), Value::from(SCHEMA_VERSION));
    m.insert("kind".into(), Value::from(kind));
    if let Value::Object(o) = body {
        for (k, v) in o {
            m.insert(k, v);
        }
    } else {
        m.insert("data".into(), body);
    }
    Value::Object(m)
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
