use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A scripted walkthrough: an ordered list of agent and reviewer requests
/// with expectations on each response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Free-form notes, e.g. what a scripted step stands in for.
    #[serde(default)]
    pub notes: Vec<String>,
    /// Whole-run wall-clock bound.
    #[serde(default)]
    pub max_duration_ms: Option<u64>,
    /// Bind address the scenario expects when the harness starts the server.
    #[serde(default)]
    pub bind_host: Option<String>,
    pub steps: Vec<ScriptStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Agent,
    Reviewer,
}

impl Actor {
    pub fn as_str(self) -> &'static str {
        match self {
            Actor::Agent => "agent",
            Actor::Reviewer => "reviewer",
        }
    }
}

impl std::str::FromStr for Actor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "agent" => Ok(Actor::Agent),
            "reviewer" => Ok(Actor::Reviewer),
            other => Err(format!("unknown actor `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Submit,
    Poll,
    Update,
    ReadMemory,
    List,
    Open,
    Action,
    Resolve,
    Events,
    MemoryAction,
    Health,
    /// Browser bootstrap link for `session`.
    Bootstrap,
    /// Arbitrary `method` + `path` relative to the server root.
    Request,
    /// Waits for a step started with `background`.
    Join,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    pub name: String,
    pub actor: Actor,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    /// Sent verbatim instead of `body`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub query: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Send credentials; `false` sends none.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub auth: bool,
    /// Start without waiting; a later `join` step with the same label
    /// checks the response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Re-send until the expectations hold or this many milliseconds pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elapsed_ms: Option<u64>,
    #[serde(default)]
    pub expect: Expect,
    /// Variable name → JSON pointer into the response body.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub save: BTreeMap<String, String>,
    /// The server may be restarted after this step.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub checkpoint: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    /// Pointer → exact value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub equals: BTreeMap<String, Value>,
    /// Pointer → value that must occur: an array element matching it, or a
    /// substring of a string.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub contains: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub not_contains: BTreeMap<String, Value>,
    /// Pointer → array length.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub length: BTreeMap<String, usize>,
    /// Lower-cased header name → exact value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
}

/// Whether `actual` matches `expected`, treating objects in `expected` as a
/// subset of the keys in `actual`.
pub fn matches(actual: &Value, expected: &Value) -> bool {
    match (actual, expected) {
        (Value::Object(a), Value::Object(e)) => e.iter().all(|(k, ev)| a.get(k).is_some_and(|av| matches(av, ev))),
        _ => actual == expected,
    }
}

pub fn contains(actual: &Value, expected: &Value) -> bool {
    match (actual, expected) {
        (Value::Array(items), _) => items.iter().any(|item| matches(item, expected)),
        (Value::String(s), Value::String(sub)) => s.contains(sub.as_str()),
        _ => false,
    }
}

/// Replaces `${name}` in every string of `value`.
pub fn substitute(value: &Value, vars: &BTreeMap<String, String>) -> Result<Value, String> {
    Ok(match value {
        Value::String(s) => Value::String(substitute_str(s, vars)?),
        Value::Array(items) => Value::Array(items.iter().map(|v| substitute(v, vars)).collect::<Result<_, _>>()?),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| Ok((k.clone(), substitute(v, vars)?)))
                .collect::<Result<_, String>>()?,
        ),
        other => other.clone(),
    })
}

pub fn substitute_str(s: &str, vars: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let end = tail.find('}').ok_or_else(|| format!("unterminated variable in `{s}`"))?;
        let name = &tail[..end];
        let value = vars.get(name).ok_or_else(|| format!("undefined variable `{name}`"))?;
        out.push_str(value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let script: ScenarioScript = serde_path_to_error::deserialize(de).map_err(|e| format!("{}: {}", e.path(), e.inner()))?;
        script.check()?;
        Ok(script)
    }

    /// Static checks: labels pair up, required fields per op are present.
    pub fn check(&self) -> Result<(), String> {
        let mut started = std::collections::BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            let at = |msg: &str| format!("step {i} ({}): {msg}", step.name);
            let needs_session = matches!(
                step.op,
                Op::Poll | Op::Update | Op::Open | Op::Action | Op::Resolve | Op::Events | Op::Bootstrap
            );
            if needs_session && step.session.is_none() {
                return Err(at("missing `session`"));
            }
            if step.op == Op::Request && (step.method.is_none() || step.path.is_none()) {
                return Err(at("`request` needs `method` and `path`"));
            }
            if let Some(label) = &step.background {
                if step.op == Op::Join || !started.insert(label.clone()) {
                    return Err(at("bad background label"));
                }
            }
            if step.op == Op::Join {
                let label = step.label.as_ref().ok_or_else(|| at("`join` needs `label`"))?;
                if !started.remove(label) {
                    return Err(at("`join` label was never started"));
                }
            }
        }
        match started.into_iter().next() {
            Some(label) => Err(format!("background step `{label}` is never joined")),
            None => Ok(()),
        }
    }
}
