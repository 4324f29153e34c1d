//! Generates the agent skill bundle, validates it and lists the endpoints it
//! tells agents to call.
//!
//! `cargo run --example skill_bundle -- ./skills https://review.example.net`

use std::path::PathBuf;

use agentclick::skills::{self, BundleConfig, TokenMode};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir()?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| tmp.path().to_path_buf());
    let base = args.next().unwrap_or_else(|| "http://127.0.0.1:4517".into());

    let config = BundleConfig { external_base_url: base, token_mode: TokenMode::EnvReference, output_dir: out.clone() };
    let files = skills::generate_to_disk(&config)?;
    for f in &files {
        let name = f.frontmatter.as_ref().map_or("?", |fm| fm.name.as_str());
        println!("{:<32} {name}", f.relative_path);
    }

    let findings = skills::validate(&skills::read_bundle(&out)?);
    println!("\n{} finding(s)", findings.len());
    for f in &findings {
        println!("  {f}");
    }
    println!("\nagent protocol:");
    for e in skills::protocol_closure(&files) {
        println!("  {:<5} {}", e.method, e.full_path());
    }
    Ok(())
}
