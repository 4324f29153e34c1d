use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use agentclick::api::{self, ServeArgs, ServerConfig};
use agentclick::harness::{self, Actor, NoHooks, RunOptions, Target};
use agentclick::skills::{self, BundleConfig, TokenMode};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "agentclick", version, about = "Review coordination server for terminal agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the review server.
    Serve(ServeArgs),
    /// Write the agent skill bundle.
    GenSkills {
        #[arg(long, default_value = "skills")]
        out: PathBuf,
        #[arg(long, env = "AGENTCLICK_EXTERNAL_URL", default_value = "http://127.0.0.1:4517")]
        external_url: String,
        /// Write this token into the skill text instead of referencing $AGENTCLICK_TOKEN.
        #[arg(long)]
        inline_token: Option<String>,
    },
    /// Run scripted walkthroughs.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Run one script. Without --endpoint a throwaway local server is started.
    Run {
        /// Script file, or the name of a bundled scenario.
        file: String,
        #[arg(long, env = "AGENTCLICK_ENDPOINT")]
        endpoint: Option<String>,
        #[arg(long, env = "AGENTCLICK_TOKEN", hide_env_values = true)]
        token: Option<String>,
        #[arg(long, env = "AGENTCLICK_REVIEWER_TOKEN", hide_env_values = true)]
        reviewer_token: Option<String>,
        /// Run only this side's steps.
        #[arg(long)]
        actor: Option<Actor>,
        /// Write the normalized transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run every bundled scenario twice and write the wire fixtures.
    RecordFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("agentclick: {message}");
    ExitCode::from(code)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("AGENTCLICK_LOG").unwrap_or_else(|_| "agentclick=info".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match Cli::parse().command {
        Command::Serve(args) => serve(args.into()).await,
        Command::GenSkills { out, external_url, inline_token } => {
            let config = BundleConfig {
                external_base_url: external_url,
                token_mode: inline_token.map_or(TokenMode::EnvReference, TokenMode::Inline),
                output_dir: out.clone(),
            };
            let files = match skills::generate_to_disk(&config) {
                Ok(files) => files,
                Err(e) => return fail(2, e),
            };
            let findings = skills::validate(&files);
            for f in &findings {
                eprintln!("{f}");
            }
            println!("wrote {} skill files to {}", files.len(), out.display());
            if findings.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Command::Scenario { command: ScenarioCommand::Run { file, endpoint, token, reviewer_token, actor, transcript } } => {
            run(&file, endpoint, token, reviewer_token, actor, transcript).await
        }
        Command::Scenario { command: ScenarioCommand::RecordFixtures { out } } => {
            match harness::record_fixtures(&harness::builtin()).await {
                Ok(files) => match harness::write_fixtures(&files, &out) {
                    Ok(()) => {
                        println!("wrote {} fixtures to {}", files.len(), out.display());
                        ExitCode::SUCCESS
                    }
                    Err(e) => fail(2, e),
                },
                Err(e) => fail(e.exit_code() as u8, e),
            }
        }
    }
}

async fn serve(config: ServerConfig) -> ExitCode {
    let generated = config.token.is_none();
    let server = match api::start(config).await {
        Ok(s) => s,
        Err(e) => return fail(2, e),
    };
    println!("agentclick listening on {}", server.base_url);
    if generated {
        println!("token: {}", server.tokens.agent);
    }
    println!("review links: {}/t/<token>/review/<session_id>", server.base_url);
    if let Some(dir) = &server.skills_written {
        println!("skills written to {}", dir.display());
    }
    if let Err(e) = shutdown_signal().await {
        return fail(2, e);
    }
    server.shutdown().await;
    ExitCode::SUCCESS
}

async fn shutdown_signal() -> std::io::Result<()> {
    #[cfg(unix)]
    {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())?;
        tokio::select! {
            r = tokio::signal::ctrl_c() => r,
            _ = term.recv() => Ok(()),
        }
    }
    #[cfg(not(unix))]
    tokio::signal::ctrl_c().await
}

async fn run(
    file: &str,
    endpoint: Option<String>,
    token: Option<String>,
    reviewer_token: Option<String>,
    actor: Option<Actor>,
    transcript_out: Option<PathBuf>,
) -> ExitCode {
    let script = match harness::load_script(file) {
        Ok(s) => s,
        Err(e) => return fail(2, e),
    };
    let options = RunOptions { actor };
    let mut local = None;
    let target = match endpoint {
        Some(url) => {
            let Some(token) = token else { return fail(2, "--token is required with --endpoint") };
            let reviewer = reviewer_token.unwrap_or_else(|| token.clone());
            Target { base_url: url, agent_token: Some(token), reviewer_token: Some(reviewer) }
        }
        None => {
            let dir = std::env::temp_dir().join(format!("agentclick-run-{}", agentclick::ids::new_id()));
            let token = agentclick::ids::new_token();
            match harness::local_server(&script, &dir, &token).await {
                Ok(server) => {
                    let target = Target::new(server.base_url.clone(), token);
                    local = Some((server, dir));
                    target
                }
                Err(e) => return fail(2, e),
            }
        }
    };
    let result = harness::run_scenario(&script, &target, &options, &mut NoHooks).await;
    if let Some((server, dir)) = local {
        server.shutdown().await;
        let _ = std::fs::remove_dir_all(dir);
    }
    match result {
        Ok(t) => {
            if let Some(path) = transcript_out {
                let (normalized, map) = harness::normalize(&t);
                let doc = serde_json::json!({ "transcript": normalized, "ids": map.ids });
                if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("json") + "\n") {
                    return fail(2, format!("{}: {e}", path.display()));
                }
            }
            println!("scenario {} passed: {} requests in {} ms", script.name, t.exchanges.len(), t.elapsed_ms);
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.exit_code() as u8, format!("scenario {} failed: {e}", script.name)),
    }
}
