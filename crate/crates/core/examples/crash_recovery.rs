//! Runs the crash_recovery scenario, killing the server at every checkpoint
//! and restarting it on the same data directory. Sessions come back from
//! their logs and the script carries on against the new address.

use std::path::PathBuf;

use agentclick::api::{self, RunningServer};
use agentclick::harness::{self, Hooks, RunOptions, ScenarioScript, ScriptStep, Target};

struct Restart {
    script: ScenarioScript,
    dir: PathBuf,
    token: String,
    server: Option<RunningServer>,
    restarts: usize,
}

impl Hooks for Restart {
    async fn checkpoint(&mut self, _: usize, step: &ScriptStep) -> Result<Option<String>, String> {
        if let Some(old) = self.server.take() {
            old.abort();
        }
        let config = harness::local_config(&self.script, &self.dir, &self.token, 0);
        let server = api::start(config).await.map_err(|e| e.to_string())?;
        self.restarts += 1;
        println!("after `{}`: killed, restarted on {}", step.name, server.base_url);
        let url = server.base_url.clone();
        self.server = Some(server);
        Ok(Some(url))
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let script = harness::builtin_named("crash_recovery").expect("bundled");
    let dir = tempfile::tempdir()?;
    let token = agentclick::ids::new_token();
    let server = harness::local_server(&script, dir.path(), &token).await?;
    let target = Target::new(server.base_url.clone(), token.clone());
    let mut hooks = Restart { script: script.clone(), dir: dir.path().to_path_buf(), token, server: Some(server), restarts: 0 };

    let transcript = harness::run_scenario(&script, &target, &RunOptions::default(), &mut hooks).await?;
    println!("{} steps passed across {} restarts in {} ms", transcript.exchanges.len(), hooks.restarts, transcript.elapsed_ms);
    if let Some(server) = hooks.server.take() {
        server.shutdown().await;
    }
    Ok(())
}
