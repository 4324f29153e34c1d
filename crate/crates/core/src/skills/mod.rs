//! The Markdown skill bundle that teaches an agent to use the server.
//!
//! ```text
//! <out>/agentclick/SKILL.md              # dispatcher: connect, protocol, routing table
//! <out>/agentclick/<kind>/SKILL.md       # one per proposal kind
//! ```

mod content;
mod validate;

pub use validate::{protocol_closure, referenced_endpoints, validate, Finding, Severity};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::ids;
use crate::model::ProposalKind;

pub const BUNDLE_DIR: &str = "agentclick";
pub const MAIN_SKILL: &str = "agentclick/SKILL.md";
pub const TOKEN_ENV: &str = "AGENTCLICK_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenMode {
    /// Skill text tells the agent to read the token from the environment.
    EnvReference,
    /// The token is written into the skill text.
    Inline(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleConfig {
    pub external_base_url: String,
    pub token_mode: TokenMode,
    pub output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum SkillError {
    #[error("external base url `{url}` is not an absolute http(s) URL")]
    InvalidUrl { url: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontmatter {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillFile {
    /// Relative to the output directory, `/`-separated.
    pub relative_path: String,
    /// `None` when the file has no parseable frontmatter block.
    pub frontmatter: Option<Frontmatter>,
    pub body: String,
}

impl SkillFile {
    pub fn render(&self) -> String {
        match &self.frontmatter {
            Some(fm) => format!("---\nname: {}\ndescription: {}\n---\n\n{}", fm.name, fm.description, self.body),
            None => self.body.clone(),
        }
    }

    /// Splits `---` fenced `key: value` frontmatter from the body.
    pub fn parse(relative_path: impl Into<String>, text: &str) -> SkillFile {
        let relative_path = relative_path.into();
        let parsed = text.strip_prefix("---\n").and_then(|rest| {
            let (head, body) = rest.split_once("\n---\n")?;
            let mut name = None;
            let mut description = None;
            for line in head.lines() {
                let (k, v) = line.split_once(':')?;
                match k.trim() {
                    "name" => name = Some(v.trim().to_string()),
                    "description" => description = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            let body = body.strip_prefix('\n').unwrap_or(body);
            Some((Frontmatter { name: name?, description: description.unwrap_or_default() }, body.to_string()))
        });
        match parsed {
            Some((fm, body)) => SkillFile { relative_path, frontmatter: Some(fm), body },
            None => SkillFile { relative_path, frontmatter: None, body: text.to_string() },
        }
    }

    /// The proposal kind a sub-skill covers, from its directory name.
    pub fn kind(&self) -> Option<ProposalKind> {
        let rest = self.relative_path.strip_prefix(&format!("{BUNDLE_DIR}/"))?;
        let (dir, file) = rest.split_once('/')?;
        (file == "SKILL.md").then(|| dir.parse().ok()).flatten()
    }
}

pub fn sub_skill_path(kind: ProposalKind) -> String {
    format!("{BUNDLE_DIR}/{kind}/SKILL.md")
}

pub fn sub_skill_name(kind: ProposalKind) -> String {
    format!("agentclick-{kind}")
}

fn check_url(url: &str) -> Result<String, SkillError> {
    let parsed = url::Url::parse(url).map_err(|_| SkillError::InvalidUrl { url: url.to_string() })?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host().is_none() {
        return Err(SkillError::InvalidUrl { url: url.to_string() });
    }
    Ok(url.trim_end_matches('/').to_string())
}

/// Generates the seven skill files. Output depends only on `config`.
pub fn generate(config: &BundleConfig) -> Result<Vec<SkillFile>, SkillError> {
    let base = check_url(&config.external_base_url)?;
    let auth = match &config.token_mode {
        TokenMode::EnvReference => format!("Authorization: Bearer ${TOKEN_ENV}"),
        TokenMode::Inline(token) => format!("Authorization: Bearer {token}"),
    };
    let mut files = vec![content::main_skill(&base, &auth)];
    files.extend(ProposalKind::ALL.iter().map(|&k| content::sub_skill(k, &base, &auth)));
    Ok(files)
}

/// Writes the bundle under `config.output_dir`, each file atomically.
pub fn write_bundle(files: &[SkillFile], output_dir: &Path) -> Result<(), SkillError> {
    for file in files {
        let path = output_dir.join(&file.relative_path);
        let io_err = |source| SkillError::Io { path: path.clone(), source };
        let parent = path.parent().expect("skill paths have a parent");
        fs::create_dir_all(parent).map_err(io_err)?;
        let tmp = parent.join(format!(".SKILL.md.{}.tmp", ids::new_id()));
        fs::write(&tmp, file.render()).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
    }
    Ok(())
}

/// Generates and writes in one step.
pub fn generate_to_disk(config: &BundleConfig) -> Result<Vec<SkillFile>, SkillError> {
    let files = generate(config)?;
    write_bundle(&files, &config.output_dir)?;
    Ok(files)
}

/// Reads every `SKILL.md` below `<dir>/agentclick`.
pub fn read_bundle(dir: &Path) -> Result<Vec<SkillFile>, SkillError> {
    let root = dir.join(BUNDLE_DIR);
    let mut files = Vec::new();
    let mut visit = vec![root.clone()];
    while let Some(d) = visit.pop() {
        let entries = fs::read_dir(&d).map_err(|source| SkillError::Io { path: d.clone(), source })?;
        for entry in entries.flatten() {
            let p = entry.path();
            if p.is_dir() {
                visit.push(p);
            } else if p.file_name().is_some_and(|n| n == "SKILL.md") {
                let text = fs::read_to_string(&p).map_err(|source| SkillError::Io { path: p.clone(), source })?;
                let rel = p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().replace('\\', "/");
                files.push(SkillFile::parse(rel, &text));
            }
        }
    }
    files.sort_by(|a, b| a.relative_path.cmp(&b.relative_path));
    Ok(files)
}
