use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::json;

use super::normalize::Normalizer;
use super::runner::{run_scenario, NoHooks, RunError, RunOptions, Target, Transcript};
use super::script::ScenarioScript;
use crate::endpoints::{self, ENDPOINTS};
use crate::ids;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("scenario {scenario}: {source}")]
    Run { scenario: String, source: RunError },
    #[error("cannot start server: {0}")]
    Server(String),
    #[error("fixtures differ between runs: {}", .0.join(", "))]
    NonDeterministic(Vec<String>),
    #[error("no fixture exercises: {}", .0.join(", "))]
    Coverage(Vec<String>),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl FixtureError {
    pub fn exit_code(&self) -> i32 {
        match self {
            FixtureError::Run { source, .. } => source.exit_code(),
            FixtureError::NonDeterministic(_) | FixtureError::Coverage(_) => 1,
            FixtureError::Server(_) | FixtureError::Io(_) => 2,
        }
    }
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn endpoint_name(method: &str, path: &str) -> &'static str {
    if let Some(e) = endpoints::lookup(method, path) {
        return e.name;
    }
    if path.starts_with("/t/") {
        "bootstrap"
    } else {
        "ui"
    }
}

/// One normalized request/response file per exchange, keyed by relative path.
pub fn fixture_files(transcript: &Transcript) -> BTreeMap<String, String> {
    let mut n = Normalizer::new(&transcript.base_urls);
    let mut files = BTreeMap::new();
    for (i, raw) in transcript.exchanges.iter().enumerate() {
        let e = n.exchange(raw);
        let name = format!(
            "{}/{:02}-{}-{}.json",
            transcript.scenario,
            i + 1,
            endpoint_name(&raw.method, &raw.path),
            slug(&e.step)
        );
        let mut request = json!({ "method": e.method, "path": e.path, "actor": e.actor });
        if let Some(body) = e.request_body {
            request["body"] = body;
        }
        let mut response = json!({ "status": e.status });
        if let Some(body) = e.response_body {
            response["body"] = body;
        }
        if !e.response_headers.is_empty() {
            response["headers"] = json!(e.response_headers);
        }
        let doc = json!({ "request": request, "response": response });
        files.insert(name, serde_json::to_string_pretty(&doc).expect("json") + "\n");
    }
    files
}

async fn run_once(scripts: &[ScenarioScript]) -> Result<BTreeMap<String, String>, FixtureError> {
    let mut files = BTreeMap::new();
    for script in scripts {
        let dir = std::env::temp_dir().join(format!("agentclick-fixtures-{}", ids::new_id()));
        let token = ids::new_token();
        let server = super::local_server(script, &dir, &token).await.map_err(|e| FixtureError::Server(e.to_string()));
        let result = match server {
            Ok(server) => {
                let target = Target::new(server.base_url.clone(), token);
                let out = run_scenario(script, &target, &RunOptions::default(), &mut NoHooks).await;
                server.shutdown().await;
                out.map_err(|source| FixtureError::Run { scenario: script.name.clone(), source })
            }
            Err(e) => Err(e),
        };
        let _ = std::fs::remove_dir_all(&dir);
        files.extend(fixture_files(&result?));
    }
    Ok(files)
}

/// Runs every script twice against fresh servers and returns the fixture
/// set, after checking both runs agree and every endpoint is exercised.
pub async fn record_fixtures(scripts: &[ScenarioScript]) -> Result<BTreeMap<String, String>, FixtureError> {
    let first = run_once(scripts).await?;
    let second = run_once(scripts).await?;
    let keys: BTreeSet<&String> = first.keys().chain(second.keys()).collect();
    let differing: Vec<String> = keys.into_iter().filter(|k| first.get(*k) != second.get(*k)).cloned().collect();
    if !differing.is_empty() {
        return Err(FixtureError::NonDeterministic(differing));
    }
    let covered: BTreeSet<&str> = first
        .keys()
        .filter_map(|k| k.split('/').nth(1)?.split('-').nth(1))
        .collect();
    let missing: Vec<String> = ENDPOINTS.iter().map(|e| e.name).filter(|n| !covered.contains(n)).map(String::from).collect();
    if !missing.is_empty() {
        return Err(FixtureError::Coverage(missing));
    }
    Ok(first)
}

/// Writes the fixture set, replacing stale `.json` files in the scenario
/// directories it owns.
pub fn write_fixtures(files: &BTreeMap<String, String>, dir: &Path) -> Result<(), FixtureError> {
    let scenarios: BTreeSet<&str> = files.keys().filter_map(|k| k.split('/').next()).collect();
    for scenario in scenarios {
        let sub = dir.join(scenario);
        if let Ok(entries) = std::fs::read_dir(&sub) {
            for entry in entries.flatten() {
                if entry.path().extension().is_some_and(|e| e == "json") {
                    std::fs::remove_file(entry.path())?;
                }
            }
        }
        std::fs::create_dir_all(&sub)?;
    }
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}
