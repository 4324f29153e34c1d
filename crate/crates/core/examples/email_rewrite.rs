//! A reviewer asks for a rewrite with a reason. The agent's poll returns 202
//! with the reason, the agent sends a new draft, and on approval the reason
//! lands in MEMORY.md where the next session reads it back.

use agentclick::api::{self, ServerConfig};
use agentclick::samples;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let memory_path = dir.path().join("MEMORY.md");
    let server = api::start(ServerConfig { port: 0, memory_file: memory_path.clone(), fsync: false, ..ServerConfig::default() }).await?;
    let api = format!("{}/api/v1", server.base_url);
    let (agent, reviewer) = (server.tokens.agent.clone(), server.tokens.reviewer.clone());
    let http = reqwest::Client::new();

    let proposal = samples::proposal("Reply about the slides", samples::formal_email());
    let created: Value = http.post(format!("{api}/proposals")).bearer_auth(&agent).json(&proposal).send().await?.json().await?;
    let id = created["session_id"].as_str().unwrap();

    let rewrite = json!({ "type": "rewrite_request", "paragraph_id": "p2", "reason": samples::EMOJI_REASON });
    http.post(format!("{api}/sessions/{id}/actions")).bearer_auth(&reviewer).json(&rewrite).send().await?.error_for_status()?;

    let resp = http.get(format!("{api}/proposals/{id}/outcome?wait_ms=5000")).bearer_auth(&agent).send().await?;
    println!("agent poll: {}", resp.status());
    let request: Value = resp.json().await?;
    println!("reasons: {}", request["reasons"]);

    let update = json!({ "artifact": samples::casual_email(), "base_revision": request["revision"] });
    http.put(format!("{api}/proposals/{id}/artifact")).bearer_auth(&agent).json(&update).send().await?.error_for_status()?;
    http.post(format!("{api}/sessions/{id}/resolve"))
        .bearer_auth(&reviewer)
        .json(&json!({ "decision": "approved", "persist_preferences": true }))
        .send()
        .await?
        .error_for_status()?;

    println!("\n--- MEMORY.md ---\n{}", std::fs::read_to_string(&memory_path)?);

    let memory: Value = http.get(format!("{api}/memory?kind=email&loaded=true")).bearer_auth(&agent).send().await?.json().await?;
    for entry in memory["entries"].as_array().unwrap() {
        println!("next session loads: {}", entry["reason"]);
    }
    server.shutdown().await;
    Ok(())
}
