use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::time::{Duration, Instant};

use reqwest::header::{HeaderMap, AUTHORIZATION, CONTENT_TYPE};
use reqwest::{Client, Method};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::task::JoinHandle;

use super::script::{self, Actor, Expect, Op, ScenarioScript, ScriptStep};
use crate::endpoints::API_PREFIX;
use crate::ids::{self, Millis};

/// Where and as whom the runner talks.
#[derive(Debug, Clone)]
pub struct Target {
    pub base_url: String,
    pub agent_token: Option<String>,
    pub reviewer_token: Option<String>,
}

impl Target {
    pub fn new(base_url: impl Into<String>, token: impl Into<String>) -> Self {
        let token = token.into();
        Target { base_url: base_url.into(), agent_token: Some(token.clone()), reviewer_token: Some(token) }
    }

    fn token(&self, actor: Actor) -> Option<&str> {
        match actor {
            Actor::Agent => self.agent_token.as_deref(),
            Actor::Reviewer => self.reviewer_token.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run only this actor's steps; `None` runs everything in order.
    pub actor: Option<Actor>,
}

/// Called after each checkpoint step. Returning a URL switches the runner to
/// a new server address.
pub trait Hooks {
    fn checkpoint(&mut self, step_index: usize, step: &ScriptStep) -> impl Future<Output = Result<Option<String>, String>> + Send;
}

pub struct NoHooks;

impl Hooks for NoHooks {
    async fn checkpoint(&mut self, _: usize, _: &ScriptStep) -> Result<Option<String>, String> {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub step_index: usize,
    pub step: String,
    pub actor: Actor,
    pub method: String,
    /// Path and query relative to the server root.
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request_body: Option<Value>,
    pub status: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_body: Option<Value>,
    /// The response headers the protocol defines.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub response_headers: BTreeMap<String, String>,
    pub started_at: Millis,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub scenario: String,
    pub base_urls: Vec<String>,
    pub exchanges: Vec<Exchange>,
    pub variables: BTreeMap<String, String>,
    pub elapsed_ms: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("step {index} `{step}`: {message}")]
    Assertion { index: usize, step: String, message: String },
    #[error("step {index} `{step}`: transport: {message}")]
    Transport { index: usize, step: String, message: String },
    #[error("script: {0}")]
    Script(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Assertion { .. } => 1,
            RunError::Transport { .. } | RunError::Script(_) => 2,
        }
    }
}

const RECORDED_HEADERS: [&str; 3] = ["x-agentclick-revision", "location", "set-cookie"];

struct Raw {
    status: u16,
    headers: HeaderMap,
    body: Option<Value>,
    started_at: Millis,
    elapsed_ms: u64,
}

#[derive(Clone)]
struct Prepared {
    method: Method,
    path: String,
    body: Option<Value>,
    raw_body: Option<String>,
    content_type: Option<String>,
    token: Option<String>,
}

pub fn client() -> Client {
    Client::builder()
        .redirect(reqwest::redirect::Policy::none())
        .pool_max_idle_per_host(0)
        .no_proxy()
        .connect_timeout(Duration::from_secs(5))
        .build()
        .expect("http client")
}

fn request_parts(step: &ScriptStep, target: &Target, vars: &BTreeMap<String, String>) -> Result<Prepared, String> {
    let session = step.session.as_deref().map(|s| script::substitute_str(s, vars)).transpose()?;
    let sid = || session.clone().unwrap_or_default();
    let (method, path) = match step.op {
        Op::Submit => (Method::POST, format!("{API_PREFIX}/proposals")),
        Op::Poll => (Method::GET, format!("{API_PREFIX}/proposals/{}/outcome", sid())),
        Op::Update => (Method::PUT, format!("{API_PREFIX}/proposals/{}/artifact", sid())),
        Op::ReadMemory => (Method::GET, format!("{API_PREFIX}/memory")),
        Op::List => (Method::GET, format!("{API_PREFIX}/sessions")),
        Op::Open => (Method::GET, format!("{API_PREFIX}/sessions/{}", sid())),
        Op::Action => (Method::POST, format!("{API_PREFIX}/sessions/{}/actions", sid())),
        Op::Resolve => (Method::POST, format!("{API_PREFIX}/sessions/{}/resolve", sid())),
        Op::Events => (Method::GET, format!("{API_PREFIX}/sessions/{}/events", sid())),
        Op::MemoryAction => (Method::POST, format!("{API_PREFIX}/memory/actions")),
        Op::Health => (Method::GET, format!("{API_PREFIX}/healthz")),
        Op::Bootstrap => {
            let token = target.token(Actor::Reviewer).unwrap_or_default();
            (Method::GET, format!("/t/{token}/review/{}", sid()))
        }
        Op::Request => {
            let m = step.method.as_deref().unwrap_or("GET");
            let method = Method::from_bytes(m.as_bytes()).map_err(|_| format!("bad method `{m}`"))?;
            (method, script::substitute_str(step.path.as_deref().unwrap_or("/"), vars)?)
        }
        Op::Join => unreachable!("join sends nothing"),
    };
    let mut path = path;
    if !step.query.is_empty() {
        let mut pairs = Vec::new();
        for (k, v) in &step.query {
            pairs.push((k.clone(), script::substitute_str(v, vars)?));
        }
        let encoded = url::form_urlencoded::Serializer::new(String::new()).extend_pairs(pairs).finish();
        path = format!("{path}?{encoded}");
    }
    Ok(Prepared {
        method,
        path,
        body: step.body.as_ref().map(|b| script::substitute(b, vars)).transpose()?,
        raw_body: step.raw_body.as_ref().map(|b| script::substitute_str(b, vars)).transpose()?,
        content_type: step.content_type.clone(),
        token: if step.auth && step.op != Op::Bootstrap { target.token(step.actor).map(str::to_string) } else { None },
    })
}

async fn send(client: &Client, base_url: &str, p: &Prepared, timeout: Duration) -> Result<Raw, String> {
    let url = format!("{}{}", base_url.trim_end_matches('/'), p.path);
    let mut req = client.request(p.method.clone(), &url).timeout(timeout);
    if let Some(token) = &p.token {
        req = req.header(AUTHORIZATION, format!("Bearer {token}"));
    }
    if let Some(raw) = &p.raw_body {
        req = req.header(CONTENT_TYPE, p.content_type.as_deref().unwrap_or("application/json")).body(raw.clone());
    } else if let Some(body) = &p.body {
        req = req
            .header(CONTENT_TYPE, p.content_type.as_deref().unwrap_or("application/json"))
            .body(serde_json::to_vec(body).expect("json value"));
    }
    let started_at = ids::now_ms();
    let clock = Instant::now();
    let res = req.send().await.map_err(|e| format!("{} {url}: {e}", p.method))?;
    let status = res.status().as_u16();
    let headers = res.headers().clone();
    let bytes = res.bytes().await.map_err(|e| format!("reading body of {url}: {e}"))?;
    let elapsed_ms = clock.elapsed().as_millis() as u64;
    let body = if bytes.is_empty() {
        None
    } else {
        Some(serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into_owned())))
    };
    Ok(Raw { status, headers, body, started_at, elapsed_ms })
}

fn pointer<'a>(body: Option<&'a Value>, ptr: &str) -> Option<&'a Value> {
    body.and_then(|b| b.pointer(ptr))
}

fn check(expect: &Expect, step: &ScriptStep, raw: &Raw, vars: &BTreeMap<String, String>) -> Result<(), String> {
    if let Some(status) = expect.status {
        if raw.status != status {
            let body = raw.body.as_ref().map(|b| b.to_string()).unwrap_or_default();
            return Err(format!("expected status {status}, got {} {body}", raw.status));
        }
    }
    let body = raw.body.as_ref();
    for (ptr, want) in &expect.equals {
        let want = script::substitute(want, vars)?;
        match pointer(body, ptr) {
            Some(got) if *got == want => {}
            got => return Err(format!("{ptr}: expected {want}, got {}", got.map_or("nothing".into(), |g| g.to_string()))),
        }
    }
    for (ptr, want) in &expect.contains {
        let want = script::substitute(want, vars)?;
        if !pointer(body, ptr).is_some_and(|got| script::contains(got, &want)) {
            return Err(format!("{ptr}: expected to contain {want}, got {}", pointer(body, ptr).map_or("nothing".into(), |g| g.to_string())));
        }
    }
    for (ptr, want) in &expect.not_contains {
        let want = script::substitute(want, vars)?;
        if pointer(body, ptr).is_some_and(|got| script::contains(got, &want)) {
            return Err(format!("{ptr}: expected not to contain {want}"));
        }
    }
    for (ptr, len) in &expect.length {
        let got = pointer(body, ptr).and_then(Value::as_array).map(Vec::len);
        if got != Some(*len) {
            return Err(format!("{ptr}: expected length {len}, got {got:?}"));
        }
    }
    for (name, want) in &expect.headers {
        let want = script::substitute_str(want, vars)?;
        let got = raw.headers.get(name.as_str()).and_then(|v| v.to_str().ok());
        if got != Some(want.as_str()) {
            return Err(format!("header {name}: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(max) = step.max_elapsed_ms {
        if raw.elapsed_ms > max {
            return Err(format!("took {} ms, limit {max} ms", raw.elapsed_ms));
        }
    }
    Ok(())
}

fn request_timeout(step: &ScriptStep) -> Duration {
    let wait = step.query.get("wait_ms").and_then(|w| w.parse::<u64>().ok()).unwrap_or(0);
    Duration::from_millis(wait) + Duration::from_secs(15)
}

fn record(index: usize, step: &ScriptStep, p: &Prepared, raw: &Raw) -> Exchange {
    let response_headers = RECORDED_HEADERS
        .iter()
        .filter_map(|h| raw.headers.get(*h).and_then(|v| v.to_str().ok()).map(|v| (h.to_string(), v.to_string())))
        .collect();
    Exchange {
        step_index: index,
        step: step.name.clone(),
        actor: step.actor,
        method: p.method.to_string(),
        path: p.path.clone(),
        request_body: p.body.clone().or_else(|| p.raw_body.clone().map(Value::String)),
        status: raw.status,
        response_body: raw.body.clone(),
        response_headers,
        started_at: raw.started_at,
        elapsed_ms: raw.elapsed_ms,
    }
}

struct Pending {
    index: usize,
    step: ScriptStep,
    prepared: Prepared,
    task: JoinHandle<Result<Raw, String>>,
}

/// Runs a script over HTTP and returns the transcript of every exchange.
pub async fn run_scenario<H: Hooks>(
    script: &ScenarioScript,
    target: &Target,
    options: &RunOptions,
    hooks: &mut H,
) -> Result<Transcript, RunError> {
    script.check().map_err(RunError::Script)?;
    let client = client();
    let mut target = target.clone();
    let mut vars: BTreeMap<String, String> = BTreeMap::new();
    let mut exchanges = Vec::new();
    let mut base_urls = vec![target.base_url.clone()];
    let mut background: HashMap<String, Pending> = HashMap::new();
    let clock = Instant::now();

    for (index, step) in script.steps.iter().enumerate() {
        if options.actor.is_some_and(|a| a != step.actor) {
            continue;
        }
        let fail = |message: String| RunError::Assertion { index, step: step.name.clone(), message };
        let transport = |message: String| RunError::Transport { index, step: step.name.clone(), message };

        let (prepared, raw, at) = if step.op == Op::Join {
            let label = step.label.as_deref().unwrap_or_default();
            let pending = background.remove(label).ok_or_else(|| RunError::Script(format!("`{label}` not started")))?;
            let raw = pending
                .task
                .await
                .map_err(|e| transport(e.to_string()))?
                .map_err(|m| RunError::Transport { index: pending.index, step: pending.step.name.clone(), message: m })?;
            (pending.prepared, raw, pending.index)
        } else {
            let prepared = request_parts(step, &target, &vars).map_err(RunError::Script)?;
            if let Some(label) = &step.background {
                let (client, base, timeout) = (client.clone(), target.base_url.clone(), request_timeout(step));
                let p = prepared.clone();
                let task = tokio::spawn(async move { send(&client, &base, &p, timeout).await });
                background.insert(label.clone(), Pending { index, step: step.clone(), prepared, task });
                continue;
            }
            let deadline = step.retry_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
            let raw = loop {
                let raw = send(&client, &target.base_url, &prepared, request_timeout(step)).await;
                let retry = deadline.is_some_and(|d| Instant::now() < d);
                match raw {
                    Ok(raw) if !retry || check(&step.expect, step, &raw, &vars).is_ok() => break raw,
                    Err(e) if !retry => return Err(transport(e)),
                    _ => tokio::time::sleep(Duration::from_millis(50)).await,
                }
            };
            (prepared, raw, index)
        };

        check(&step.expect, step, &raw, &vars).map_err(fail)?;
        for (name, ptr) in &step.save {
            let value = pointer(raw.body.as_ref(), ptr).ok_or_else(|| fail(format!("cannot save `{name}`: nothing at {ptr}")))?;
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            vars.insert(name.clone(), text);
        }
        let source = if step.op == Op::Join { &script.steps[at] } else { step };
        exchanges.push(record(at, source, &prepared, &raw));

        if step.checkpoint {
            if let Some(url) = hooks.checkpoint(index, step).await.map_err(transport)? {
                target.base_url = url.clone();
                base_urls.push(url);
            }
        }
    }
    if let Some(label) = background.keys().next() {
        return Err(RunError::Script(format!("background step `{label}` belongs to another actor")));
    }

    let elapsed_ms = clock.elapsed().as_millis() as u64;
    if let Some(max) = script.max_duration_ms {
        if elapsed_ms > max {
            return Err(RunError::Assertion {
                index: script.steps.len(),
                step: script.name.clone(),
                message: format!("scenario took {elapsed_ms} ms, limit {max} ms"),
            });
        }
    }
    Ok(Transcript { scenario: script.name.clone(), base_urls, exchanges, variables: vars, elapsed_ms })
}
