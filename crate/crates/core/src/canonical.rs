//! Byte-stable JSON: object keys sorted, floats in shortest round-trip form.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::new();
            for (k, v) in entries {
                sorted.insert(k, sort_keys(v));
            }
            Value::Object(sorted)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    serde_json::to_value(value)
        .map(sort_keys)
        .map_err(|e| Error::InvalidArgument(format!("not serializable: {e}")))
}

/// Compact canonical encoding.
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(&to_value(value)?).expect("a Value always serializes"))
}

/// Indented canonical encoding with a trailing newline, for files on disk.
pub fn to_vec_pretty<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&to_value(value)?).expect("a Value always serializes");
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_come_out_sorted() {
        let mut m = HashMap::new();
        for k in ["zeta", "alpha", "mid", "beta"] {
            m.insert(k, serde_json::json!({"y": 1, "x": [{"b": 0.1, "a": 2}]}));
        }
        let s = String::from_utf8(to_vec(&m).unwrap()).unwrap();
        assert!(s.starts_with(r#"{"alpha":{"x":[{"a":2,"b":0.1}],"y":1},"beta""#));
        assert_eq!(to_vec(&m).unwrap(), to_vec(&m).unwrap());
    }
}
