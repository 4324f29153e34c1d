//! Scripted agent and reviewer clients that drive a server over HTTP.
//!
//! Scripts are JSON files; [`builtin`] lists the bundled walkthroughs.
//! [`run_scenario`] executes one against a running server and returns a
//! transcript; [`record_fixtures`] runs every bundled script twice against
//! fresh servers and pins the normalized exchanges as fixture files.

mod fixtures;
mod normalize;
mod runner;
mod script;

pub use fixtures::{fixture_files, record_fixtures, write_fixtures, FixtureError};
pub use normalize::{normalize, Normalizer, BASE_PLACEHOLDER, TIME_PLACEHOLDER, TOKEN_PLACEHOLDER};
pub use runner::{client, run_scenario, Exchange, Hooks, NoHooks, RunError, RunOptions, Target, Transcript};
pub use script::{Actor, Expect, Op, ScenarioScript, ScriptStep};

use std::net::{IpAddr, Ipv4Addr, UdpSocket};
use std::path::Path;

use crate::api::{self, RunningServer, ServeError, ServerConfig};

const BUILTIN: [(&str, &str); 5] = [
    ("plan_constraint_injection", include_str!("../../scenarios/plan_constraint_injection.json")),
    ("email_rewrite_reason", include_str!("../../scenarios/email_rewrite_reason.json")),
    ("remote_review", include_str!("../../scenarios/remote_review.json")),
    ("artifact_tour", include_str!("../../scenarios/artifact_tour.json")),
    ("crash_recovery", include_str!("../../scenarios/crash_recovery.json")),
];

/// The bundled scenario scripts, parsed.
pub fn builtin() -> Vec<ScenarioScript> {
    BUILTIN
        .iter()
        .map(|(name, text)| ScenarioScript::parse(text).unwrap_or_else(|e| panic!("bundled scenario {name}: {e}")))
        .collect()
}

pub fn builtin_named(name: &str) -> Option<ScenarioScript> {
    builtin().into_iter().find(|s| s.name == name)
}

/// Loads a script from a file, or a bundled one by name.
pub fn load_script(path_or_name: &str) -> Result<ScenarioScript, String> {
    let path = Path::new(path_or_name);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path_or_name}: {e}"))?;
        return ScenarioScript::parse(&text).map_err(|e| format!("{path_or_name}: {e}"));
    }
    builtin_named(path_or_name).ok_or_else(|| format!("no scenario file or bundled scenario named `{path_or_name}`"))
}

/// An address of this machine other than loopback, if it has one.
pub fn non_loopback_ip() -> Option<IpAddr> {
    let socket = UdpSocket::bind((Ipv4Addr::UNSPECIFIED, 0)).ok()?;
    socket.connect((Ipv4Addr::new(192, 0, 2, 1), 9)).ok()?;
    let ip = socket.local_addr().ok()?.ip();
    (!ip.is_loopback() && !ip.is_unspecified()).then_some(ip)
}

/// Starts a throwaway server for a script, with its state under `dir`.
pub async fn local_server(script: &ScenarioScript, dir: &Path, token: &str) -> Result<RunningServer, ServeError> {
    api::start(local_config(script, dir, token, 0)).await
}

pub fn local_config(script: &ScenarioScript, dir: &Path, token: &str, port: u16) -> ServerConfig {
    ServerConfig {
        host: script.bind_host.clone().unwrap_or_else(|| "127.0.0.1".into()),
        port,
        data_dir: Some(dir.join("data")),
        memory_file: dir.join("MEMORY.md"),
        token: Some(token.to_string()),
        ..ServerConfig::default()
    }
}
