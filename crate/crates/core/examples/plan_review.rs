//! An agent proposes a training plan over HTTP; a reviewer constrains two
//! steps and approves; the agent's long poll returns the constrained plan.

use agentclick::api::{self, ServerConfig};
use agentclick::model::ArtifactPayload;
use agentclick::samples;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let server = api::start(ServerConfig {
        port: 0,
        memory_file: dir.path().join("MEMORY.md"),
        fsync: false,
        ..ServerConfig::default()
    })
    .await?;
    let api = format!("{}/api/v1", server.base_url);
    let token = server.tokens.agent.clone();
    let reviewer = server.tokens.reviewer.clone();
    let http = reqwest::Client::new();

    let proposal = samples::proposal("Train ResNet-18 on CIFAR-10", samples::resnet_plan());
    let created: Value = http.post(format!("{api}/proposals")).bearer_auth(&token).json(&proposal).send().await?.json().await?;
    let id = created["session_id"].as_str().unwrap().to_string();
    println!("submitted {id}, review at {}", created["review_url"]);

    let poll = tokio::spawn({
        let (http, api, token, id) = (http.clone(), api.clone(), token.clone(), id.clone());
        async move { http.get(format!("{api}/proposals/{id}/outcome?wait_ms=10000")).bearer_auth(token).send().await }
    });

    for (step, constraint) in [("training-loop", samples::CHECKPOINT_CONSTRAINT), ("execution", samples::GPU_CONSTRAINT)] {
        let action = json!({ "type": "add_constraint", "step_id": step, "constraint": constraint });
        http.post(format!("{api}/sessions/{id}/actions")).bearer_auth(&reviewer).json(&action).send().await?.error_for_status()?;
    }
    http.post(format!("{api}/sessions/{id}/resolve"))
        .bearer_auth(&reviewer)
        .json(&json!({ "decision": "approved" }))
        .send()
        .await?
        .error_for_status()?;

    let outcome: agentclick::model::ReviewOutcome = poll.await??.json().await?;
    let ArtifactPayload::Plan(plan) = outcome.final_artifact else { anyhow::bail!("not a plan") };
    println!("decision: {:?}, revision {}", outcome.decision, outcome.revision);
    for step in plan.steps {
        println!("- {}: {}", step.step_id, step.description);
        for c in step.constraints {
            println!("    constraint: {c}");
        }
    }
    server.shutdown().await;
    Ok(())
}
