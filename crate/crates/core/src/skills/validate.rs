use std::collections::{BTreeMap, BTreeSet};

use super::{SkillFile, MAIN_SKILL};
use crate::endpoints::{self, Endpoint};
use crate::model::{allowed_actions, ACTION_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub file: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.file, self.message)
    }
}

const METHODS: [&str; 5] = ["GET", "POST", "PUT", "PATCH", "DELETE"];

/// Every `METHOD <url-or-path>` pair naming an `/api/` path, across all bodies.
pub fn referenced_endpoints(files: &[SkillFile]) -> BTreeSet<(String, String)> {
    let mut found = BTreeSet::new();
    for file in files {
        let words: Vec<&str> = file.body.split(|c: char| c.is_whitespace() || c == '`').filter(|w| !w.is_empty()).collect();
        for pair in words.windows(2) {
            if !METHODS.contains(&pair[0]) {
                continue;
            }
            if let Some(at) = pair[1].find("/api/") {
                found.insert((pair[0].to_string(), pair[1][at..].to_string()));
            }
        }
    }
    found
}

/// The table entries a bundle actually tells agents to call.
pub fn protocol_closure(files: &[SkillFile]) -> BTreeSet<&'static Endpoint> {
    referenced_endpoints(files).iter().filter_map(|(m, p)| endpoints::lookup(m, p)).collect()
}

fn routing_rows(body: &str) -> Vec<(String, String)> {
    body.lines()
        .filter_map(|line| {
            let cells: Vec<&str> = line.trim().strip_prefix('|')?.split('|').map(str::trim).collect();
            (cells.len() >= 3 && cells[1].ends_with("SKILL.md")).then(|| (cells[0].to_string(), cells[1].to_string()))
        })
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn check_urls(file: &SkillFile, out: &mut Vec<Finding>) {
    for scheme in ["http://", "https://"] {
        for (at, _) in file.body.match_indices(scheme) {
            let tail = &file.body[at..];
            let end = tail.find(|c: char| c.is_whitespace() || matches!(c, '`' | ')' | '"' | '>' | '<')).unwrap_or(tail.len());
            let url = &tail[..end];
            let ok = url::Url::parse(url).is_ok_and(|u| u.host().is_some());
            if !ok {
                out.push(Finding { severity: Severity::Error, file: file.relative_path.clone(), message: format!("malformed URL `{url}`") });
            }
        }
    }
}

/// Checks a bundle for internal consistency. An empty report means clean.
pub fn validate(files: &[SkillFile]) -> Vec<Finding> {
    let mut out = Vec::new();
    let err = |file: &str, message: String| Finding { severity: Severity::Error, file: file.to_string(), message };

    let mut names: BTreeMap<&str, &str> = BTreeMap::new();
    for file in files {
        match &file.frontmatter {
            None => out.push(err(&file.relative_path, "missing frontmatter".into())),
            Some(fm) => {
                if fm.description.trim().is_empty() {
                    out.push(err(&file.relative_path, "empty description".into()));
                }
                if let Some(prev) = names.insert(&fm.name, &file.relative_path) {
                    out.push(err(&file.relative_path, format!("duplicate skill name `{}` (also in {prev})", fm.name)));
                }
            }
        }
        check_urls(file, &mut out);
    }

    match files.iter().find(|f| f.relative_path == MAIN_SKILL) {
        None => out.push(err(MAIN_SKILL, "main skill missing".into())),
        Some(main) => {
            let rows = routing_rows(&main.body);
            let listed: BTreeSet<&str> = rows.iter().map(|(_, p)| p.as_str()).collect();
            for (name, path) in &rows {
                match files.iter().find(|f| &f.relative_path == path) {
                    None => out.push(err(MAIN_SKILL, format!("routing table references missing sub-skill `{name}` ({path})"))),
                    Some(f) => {
                        if f.frontmatter.as_ref().is_some_and(|fm| &fm.name != name) {
                            out.push(err(MAIN_SKILL, format!("routing table names `{name}` but {path} declares another name")));
                        }
                    }
                }
            }
            for f in files.iter().filter(|f| f.relative_path != MAIN_SKILL) {
                if !listed.contains(f.relative_path.as_str()) {
                    out.push(err(MAIN_SKILL, format!("sub-skill {} is not in the routing table", f.relative_path)));
                }
            }
        }
    }

    for file in files {
        let Some(kind) = file.kind() else { continue };
        let allowed = allowed_actions(kind);
        let mut reported = BTreeSet::new();
        for word in file.body.split(|c| !is_word_char(c)) {
            if ACTION_NAMES.contains(&word) && !allowed.contains(&word) && reported.insert(word) {
                out.push(err(&file.relative_path, format!("action `{word}` is not valid for {kind} proposals")));
            }
        }
    }

    for (method, path) in referenced_endpoints(files) {
        if endpoints::lookup(&method, &path).is_none() {
            let file = files
                .iter()
                .find(|f| f.body.contains(&path))
                .map_or_else(String::new, |f| f.relative_path.clone());
            out.push(err(&file, format!("endpoint `{method} {path}` is not part of the API")));
        }
    }
    out
}
