//! Turning decoded wire values into well-typed proposals.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::artifact::*;
use crate::diff;

pub const MAX_TITLE_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{} validation error(s), first: {}", .errors.len(), .errors.first().map(|e| e.to_string()).unwrap_or_default())]
pub struct ValidationErrors {
    pub errors: Vec<ValidationError>,
}

impl ValidationErrors {
    pub fn one(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationErrors { errors: vec![ValidationError::new(path, message)] }
    }

    pub fn has_path(&self, path: &str) -> bool {
        self.errors.iter().any(|e| e.path == path)
    }
}

const PROPOSAL_FIELDS: [&str; 5] = ["kind", "title", "agent_session_id", "created_at", "payload"];

/// Validates a decoded proposal body.
///
/// All top-level problems are collected; payload problems are reported under
/// `payload`. The payload's own `kind` tag is optional and, when present,
/// must agree with the proposal kind.
pub fn validate_proposal(raw: &Value) -> Result<Proposal, ValidationErrors> {
    let Some(obj) = raw.as_object() else {
        return Err(ValidationErrors::one("", "expected a JSON object"));
    };
    let mut errors = Vec::new();
    for key in obj.keys() {
        if !PROPOSAL_FIELDS.contains(&key.as_str()) {
            errors.push(ValidationError::new(key.clone(), "unknown field"));
        }
    }

    let kind = match obj.get("kind") {
        None => {
            errors.push(ValidationError::new("kind", "missing field"));
            None
        }
        Some(Value::String(s)) => match s.parse::<ProposalKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                errors.push(ValidationError::new("kind", e.to_string()));
                None
            }
        },
        Some(_) => {
            errors.push(ValidationError::new("kind", "expected a string"));
            None
        }
    };

    let title = required_string(obj, "title", &mut errors);
    if let Some(t) = &title {
        let n = t.chars().count();
        if t.trim().is_empty() {
            errors.push(ValidationError::new("title", "must be non-empty"));
        } else if n > MAX_TITLE_CHARS {
            errors.push(ValidationError::new("title", format!("{n} characters exceeds {MAX_TITLE_CHARS}")));
        }
    }
    let agent_session_id = required_string(obj, "agent_session_id", &mut errors);
    let created_at = match obj.get("created_at") {
        None | Some(Value::Null) => 0,
        Some(v) => match v.as_i64() {
            Some(ms) => ms,
            None => {
                errors.push(ValidationError::new("created_at", "expected integer milliseconds"));
                0
            }
        },
    };

    let payload = match (obj.get("payload"), kind) {
        (None, _) => {
            errors.push(ValidationError::new("payload", "missing field"));
            None
        }
        (Some(_), None) => None,
        (Some(value), Some(kind)) => match decode_artifact(kind, value) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.extend(e.errors);
                None
            }
        },
    };

    match (kind, title, agent_session_id, payload) {
        (Some(kind), Some(title), Some(agent_session_id), Some(payload)) if errors.is_empty() => {
            Ok(Proposal { kind, title, agent_session_id, created_at, payload })
        }
        _ => Err(ValidationErrors { errors }),
    }
}

fn required_string(obj: &Map<String, Value>, key: &str, errors: &mut Vec<ValidationError>) -> Option<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(ValidationError::new(key, "expected a string"));
            None
        }
        None => {
            errors.push(ValidationError::new(key, "missing field"));
            None
        }
    }
}

/// Decodes and validates an artifact of a known kind. Paths are reported
/// relative to `payload`.
pub fn decode_artifact(kind: ProposalKind, value: &Value) -> Result<ArtifactPayload, ValidationErrors> {
    let Some(obj) = value.as_object() else {
        return Err(ValidationErrors::one("payload", format!("expected a {kind} payload object")));
    };
    let mut obj = obj.clone();
    match obj.get("kind") {
        None => {
            obj.insert("kind".into(), Value::String(kind.as_str().into()));
        }
        Some(Value::String(tag)) if tag == kind.as_str() => {}
        Some(other) => {
            return Err(ValidationErrors::one(
                "payload",
                format!("payload kind {other} does not match proposal kind `{kind}`"),
            ))
        }
    }
    let mut payload: ArtifactPayload = serde_path_to_error::deserialize(Value::Object(obj)).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { "payload".to_string() } else { format!("payload.{inner}") };
        ValidationErrors::one(path, format!("not a valid {kind} payload: {}", e.inner()))
    })?;
    normalize_artifact(&mut payload).map_err(|errors| ValidationErrors { errors })?;
    Ok(payload)
}

/// Checks artifact invariants, filling in hunks from the submitted diff text
/// for code artifacts.
pub fn normalize_artifact(payload: &mut ArtifactPayload) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    if let ArtifactPayload::Code(code) = payload {
        merge_diff_text(code, &mut errors);
    }
    errors.extend(check_artifact(payload));
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn merge_diff_text(code: &mut CodeArtifact, errors: &mut Vec<ValidationError>) {
    let Some(text) = &code.diff else { return };
    let parsed = match diff::parse_unified_diff(text) {
        Ok(cs) => cs,
        Err(e) => {
            errors.push(ValidationError::new("payload.diff", e.to_string()));
            return;
        }
    };
    for parsed_file in parsed.files {
        match code.files.iter_mut().find(|f| f.path == parsed_file.path) {
            Some(file) if file.hunks.is_empty() => file.hunks = parsed_file.hunks,
            Some(file) if file.hunks == parsed_file.hunks => {}
            Some(_) => errors.push(ValidationError::new(
                "payload.files",
                format!("hunks for `{}` disagree with the diff text", parsed_file.path),
            )),
            None => code.files.push(parsed_file),
        }
    }
}

fn dup_check<'a>(ids: impl Iterator<Item = &'a str>, path: impl Fn(usize) -> String, errors: &mut Vec<ValidationError>) {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            errors.push(ValidationError::new(path(i), format!("duplicate id `{id}`")));
        }
    }
}

/// Checks the semantic invariants of a decoded artifact.
pub fn check_artifact(payload: &ArtifactPayload) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    match payload {
        ArtifactPayload::Email(email) => {
            dup_check(
                email.draft.iter().map(|p| p.paragraph_id.as_str()),
                |i| format!("payload.draft[{i}].paragraph_id"),
                &mut errors,
            );
            if let Some(selected) = &email.selected_message {
                if !email.inbox.iter().any(|m| m.message_id == selected.message_id) {
                    errors.push(ValidationError::new(
                        "payload.selected_message.message_id",
                        "does not reference an inbox message",
                    ));
                }
            }
        }
        ArtifactPayload::Plan(plan) => {
            dup_check(plan.steps.iter().map(|s| s.step_id.as_str()), |i| format!("payload.steps[{i}].step_id"), &mut errors);
        }
        ArtifactPayload::Code(code) => check_code(code, &mut errors),
        ArtifactPayload::Memory(memory) => {
            if memory.summary_draft.trim().is_empty() {
                errors.push(ValidationError::new("payload.summary_draft", "must be non-empty"));
            }
            dup_check(
                memory.touched_entries.iter().map(|e| e.entry_id.as_str()),
                |i| format!("payload.touched_entries[{i}].entry_id"),
                &mut errors,
            );
            for (i, entry) in memory.touched_entries.iter().enumerate() {
                if entry.reason.trim().is_empty() {
                    errors.push(ValidationError::new(format!("payload.touched_entries[{i}].reason"), "must be non-empty"));
                }
            }
        }
        ArtifactPayload::Trajectory(traj) => {
            dup_check(traj.steps.iter().map(|s| s.step_id.as_str()), |i| format!("payload.steps[{i}].step_id"), &mut errors);
            let mut failed_seen = false;
            for (i, step) in traj.steps.iter().enumerate() {
                match step.status {
                    TrajStatus::Failed => failed_seen = true,
                    TrajStatus::Recovered if !failed_seen => errors.push(ValidationError::new(
                        format!("payload.steps[{i}].status"),
                        "recovered step without an earlier failed step",
                    )),
                    _ => {}
                }
            }
        }
        ArtifactPayload::Approval(approval) => {
            if approval.options.is_empty() {
                errors.push(ValidationError::new("payload.options", "must be non-empty"));
            }
            dup_check(
                approval.options.iter().map(|o| o.option_id.as_str()),
                |i| format!("payload.options[{i}].option_id"),
                &mut errors,
            );
            if let Some(selected) = &approval.selected {
                if !approval.options.iter().any(|o| &o.option_id == selected) {
                    errors.push(ValidationError::new("payload.selected", format!("unknown option `{selected}`")));
                }
            }
        }
    }
    errors
}

fn check_code(code: &CodeArtifact, errors: &mut Vec<ValidationError>) {
    dup_check(code.files.iter().map(|f| f.path.as_str()), |i| format!("payload.files[{i}].path"), errors);
    for (i, file) in code.files.iter().enumerate() {
        if !file.contents_match_status() {
            errors.push(ValidationError::new(
                format!("payload.files[{i}]"),
                format!("contents do not agree with status {:?}", file.status),
            ));
        }
        for (j, hunk) in file.hunks.iter().enumerate() {
            if hunk.old_side_count() != hunk.old_len as usize || hunk.new_side_count() != hunk.new_len as usize {
                errors.push(ValidationError::new(
                    format!("payload.files[{i}].hunks[{j}]"),
                    "line tallies do not match old_len/new_len",
                ));
            }
            if j > 0 {
                let prev = &file.hunks[j - 1];
                if hunk.old_index() < prev.old_index() + prev.old_len as usize {
                    errors.push(ValidationError::new(
                        format!("payload.files[{i}].hunks[{j}]"),
                        "hunks must be ordered by old_start and must not overlap",
                    ));
                }
            }
        }
    }
    let hunk_exists = |path: &str, idx: usize| code.files.iter().any(|f| f.path == path && idx < f.hunks.len());
    for key in code.hunk_decisions.keys() {
        if !hunk_exists(&key.path, key.hunk_index) {
            errors.push(ValidationError::new(
                "payload.hunk_decisions",
                format!("no hunk {}#{}", key.path, key.hunk_index),
            ));
        }
    }
    for (i, note) in code.line_annotations.iter().enumerate() {
        let in_range = code
            .files
            .iter()
            .find(|f| f.path == note.path)
            .and_then(|f| f.hunks.get(note.hunk_index))
            .is_some_and(|h| note.line_offset < h.lines.len());
        if !in_range {
            errors.push(ValidationError::new(format!("payload.line_annotations[{i}]"), "references no hunk line"));
        }
    }
}
