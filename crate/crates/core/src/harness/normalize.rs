use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use super::runner::{Exchange, Transcript};

const TIME_KEYS: [&str; 7] = ["timestamp", "created_at", "updated_at", "deadline", "started_at", "elapsed_ms", "created"];
pub const TIME_PLACEHOLDER: &str = "<time>";
pub const TOKEN_PLACEHOLDER: &str = "<token>";
pub const BASE_PLACEHOLDER: &str = "<base>";

/// Replaces run-specific values with stable placeholders. The mapping is
/// kept so a normalized transcript can be related back to the raw one.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Normalizer {
    pub ids: BTreeMap<String, String>,
    pub base_urls: Vec<String>,
}

fn hex_runs(s: &str) -> Vec<(usize, usize)> {
    let bytes = s.as_bytes();
    let is_hex = |b: u8| b.is_ascii_digit() || (b'a'..=b'f').contains(&b);
    let mut runs = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if is_hex(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_hex(bytes[i]) {
                i += 1;
            }
            let bounded = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
            let bounded = bounded && (i == bytes.len() || !bytes[i].is_ascii_alphanumeric());
            if bounded && (i - start == 32 || i - start == 64) {
                runs.push((start, i));
            }
        } else {
            i += 1;
        }
    }
    runs
}

impl Normalizer {
    pub fn new(base_urls: &[String]) -> Self {
        let mut base_urls = base_urls.to_vec();
        base_urls.sort_by_key(|u| std::cmp::Reverse(u.len()));
        Normalizer { ids: BTreeMap::new(), base_urls }
    }

    pub fn string(&mut self, s: &str) -> String {
        let mut s = s.to_string();
        for base in &self.base_urls {
            s = s.replace(base.trim_end_matches('/'), BASE_PLACEHOLDER);
        }
        let mut out = String::with_capacity(s.len());
        let mut last = 0;
        for (start, end) in hex_runs(&s) {
            out.push_str(&s[last..start]);
            let run = &s[start..end];
            if run.len() == 64 {
                out.push_str(TOKEN_PLACEHOLDER);
            } else {
                let next = self.ids.len() + 1;
                out.push_str(self.ids.entry(run.to_string()).or_insert_with(|| format!("<id-{next}>")));
            }
            last = end;
        }
        out.push_str(&s[last..]);
        out
    }

    pub fn value(&mut self, v: &Value) -> Value {
        match v {
            Value::String(s) => Value::String(self.string(s)),
            Value::Array(items) => Value::Array(items.iter().map(|i| self.value(i)).collect()),
            Value::Object(map) => {
                let mut out = Map::new();
                for (k, v) in map {
                    let v = if TIME_KEYS.contains(&k.as_str()) && v.is_number() {
                        Value::String(TIME_PLACEHOLDER.into())
                    } else {
                        self.value(v)
                    };
                    out.insert(self.string(k), v);
                }
                Value::Object(out)
            }
            other => other.clone(),
        }
    }

    pub fn exchange(&mut self, e: &Exchange) -> Exchange {
        Exchange {
            path: self.string(&e.path),
            request_body: e.request_body.as_ref().map(|b| self.value(b)),
            response_body: e.response_body.as_ref().map(|b| self.value(b)),
            response_headers: e.response_headers.iter().map(|(k, v)| (k.clone(), self.string(v))).collect(),
            started_at: 0,
            elapsed_ms: 0,
            ..e.clone()
        }
    }
}

/// The transcript with ids, tokens, base URLs and timestamps replaced, and
/// the id map used.
pub fn normalize(t: &Transcript) -> (Transcript, Normalizer) {
    let mut n = Normalizer::new(&t.base_urls);
    let exchanges = t.exchanges.iter().map(|e| n.exchange(e)).collect();
    let variables = t.variables.iter().map(|(k, v)| (k.clone(), n.string(v))).collect();
    let out = Transcript {
        scenario: t.scenario.clone(),
        base_urls: vec![BASE_PLACEHOLDER.into()],
        exchanges,
        variables,
        elapsed_ms: 0,
    };
    (out, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn ids_numbered_in_first_seen_order() {
        let a = "0123456789abcdef0123456789abcdef";
        let b = "fedcba9876543210fedcba9876543210";
        let token = "ab".repeat(32);
        let mut n = Normalizer::new(&["http://127.0.0.1:5000".to_string()]);
        let v = json!({
            "path": format!("/sessions/{b}/x/{a}"),
            "again": b,
            "url": format!("http://127.0.0.1:5000/t/{token}/review/{a}"),
            "created_at": 17,
            "not_an_id": format!("{a}0"),
        });
        assert_eq!(
            n.value(&v),
            json!({
                "path": "/sessions/<id-1>/x/<id-2>",
                "again": "<id-1>",
                "url": "<base>/t/<token>/review/<id-2>",
                "created_at": "<time>",
                "not_an_id": format!("{a}0"),
            })
        );
    }
}
