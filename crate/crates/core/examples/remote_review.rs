//! Review from another machine: the server listens on all interfaces and the
//! agent and reviewer scripts both talk to it through this machine's
//! non-loopback address, each running only its own steps.

use agentclick::harness::{self, Actor, NoHooks, RunOptions, Target};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let Some(ip) = harness::non_loopback_ip() else {
        println!("no non-loopback address on this machine; nothing to show");
        return Ok(());
    };
    let script = harness::builtin_named("remote_review").expect("bundled");
    let dir = tempfile::tempdir()?;
    let token = agentclick::ids::new_token();
    let mut config = harness::local_config(&script, dir.path(), &token, 0);
    config.host = "0.0.0.0".into();
    config.external_url = None;
    let server = agentclick::api::start(config).await?;
    let url = format!("http://{ip}:{}", server.addr.port());
    println!("server on {}, reviewer uses {url}", server.addr);

    let target = Target::new(url, token);
    let (as_agent, as_reviewer) = (RunOptions { actor: Some(Actor::Agent) }, RunOptions { actor: Some(Actor::Reviewer) });
    let (mut h1, mut h2) = (NoHooks, NoHooks);
    let (agent, reviewer) = tokio::join!(
        harness::run_scenario(&script, &target, &as_agent, &mut h1),
        harness::run_scenario(&script, &target, &as_reviewer, &mut h2),
    );
    let (agent, reviewer) = (agent?, reviewer?);
    for e in reviewer.exchanges.iter().chain(&agent.exchanges) {
        println!("{:<8} {:<5} {:<48} {}", e.actor.as_str(), e.method, e.path, e.status);
    }
    server.shutdown().await;
    Ok(())
}
