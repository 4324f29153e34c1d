//! Deterministic byte encoding for domain values.
//!
//! Compact JSON with object keys sorted lexicographically by their UTF-8
//! bytes. Timestamps are already integer milliseconds in every domain type,
//! so no special casing is needed here. The same encoding is used for event
//! log lines and for byte-level comparisons during replay checks.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("encode: {0}")]
    Encode(serde_json::Error),
    #[error("decode: {0}")]
    Decode(serde_json::Error),
}

pub fn encode<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let value = serde_json::to_value(value).map_err(CanonicalError::Encode)?;
    Ok(encode_value(&value))
}

pub fn encode_value(value: &Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(128);
    write_value(value, &mut out);
    out
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    serde_json::from_slice(bytes).map_err(CanonicalError::Decode)
}

fn write_value(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push(b'{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(key, out);
                out.push(b':');
                write_value(&map[key], out);
            }
            out.push(b'}');
        }
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out);
            }
            out.push(b']');
        }
        Value::String(s) => write_string(s, out),
        // Scalars: serde_json's compact form is already canonical.
        other => out.extend_from_slice(other.to_string().as_bytes()),
    }
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    // serde_json string escaping is deterministic (minimal escapes, no \u for non-ASCII)
    let escaped = serde_json::to_string(s).expect("string serialization is infallible");
    out.extend_from_slice(escaped.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_compact() {
        let a = json!({"b": 1, "a": {"z": [1, 2], "y": "x"}});
        assert_eq!(encode_value(&a), br#"{"a":{"y":"x","z":[1,2]},"b":1}"#.to_vec());
    }

    #[test]
    fn field_order_does_not_matter() {
        let a: Value = serde_json::from_str(r#"{"x":1,"y":{"q":true,"p":null}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y":{"p":null,"q":true},"x":1}"#).unwrap();
        assert_eq!(encode_value(&a), encode_value(&b));
    }

    #[test]
    fn unicode_is_not_escaped() {
        let v = json!({"t": "caf\u{e9} \u{1F600}\n"});
        assert_eq!(String::from_utf8(encode_value(&v)).unwrap(), "{\"t\":\"caf\u{e9} \u{1F600}\\n\"}");
    }
}
