//! Preference memory: reason-tagged corrections persisted in a Markdown file
//! that people can read and edit by hand.

mod format;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ids::{self, Millis};
use crate::model::{
    ActionOp, ArtifactPayload, Decision, MemoryArtifact, MemoryEntry, Proposal, ProposalKind, ReviewOutcome,
};
use crate::session::{EventBody, ReviewSession};

use format::Segment;

/// Longest before/after snippet kept, in characters.
pub const SNIPPET_CAP: usize = 2000;
const ELLIPSIS: char = '…';
const NEW_FILE_HEADER: &str = "# Agent preferences\n\nReviewer corrections recorded by agentclick. Edit freely outside the marker lines.\n";

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("reason must be non-empty")]
    EmptyReason,
    #[error("summary draft must be non-empty")]
    EmptyDraft,
    #[error("unknown entry `{0}`")]
    UnknownEntry(String),
    #[error("line {line}: duplicate entry id `{entry_id}`")]
    DuplicateEntry { line: usize, entry_id: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("outcome is {0:?}, only approved compactions are committed")]
    NotApproved(Decision),
    #[error("outcome carries a {0} artifact, expected memory")]
    KindMismatch(ProposalKind),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub summary_id: String,
    pub text: String,
    pub created_at: Millis,
}

/// A correction to be recorded; id, timestamp and loaded flag are assigned
/// on record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDraft {
    pub kind: ProposalKind,
    pub reason: String,
    #[serde(default)]
    pub before: Option<String>,
    #[serde(default)]
    pub after: Option<String>,
}

/// Parsed contents of a memory file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryStore {
    segments: Vec<Segment>,
}

fn cap(snippet: Option<String>) -> (Option<String>, bool) {
    match snippet {
        Some(s) if s.chars().count() > SNIPPET_CAP => {
            let mut cut: String = s.chars().take(SNIPPET_CAP - 1).collect();
            cut.push(ELLIPSIS);
            (Some(cut), true)
        }
        other => (other, false),
    }
}

impl MemoryStore {
    pub fn parse(text: &str) -> Result<Self, MemoryError> {
        Ok(MemoryStore { segments: format::parse(text)? })
    }

    pub fn serialize(&self) -> String {
        format::serialize(&self.segments)
    }

    /// Prose before the first block.
    pub fn preamble(&self) -> &str {
        match self.segments.first() {
            Some(Segment::Text(t)) => t,
            _ => "",
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Entry { entry, .. } => Some(entry),
            _ => None,
        })
    }

    pub fn entry(&self, entry_id: &str) -> Option<&MemoryEntry> {
        self.entries().find(|e| e.entry_id == entry_id)
    }

    pub fn loaded_entries(&self, kind: Option<ProposalKind>) -> Vec<&MemoryEntry> {
        self.entries().filter(|e| e.loaded && kind.is_none_or(|k| e.kind == k)).collect()
    }

    pub fn summaries(&self) -> impl Iterator<Item = &Summary> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Summary { summary, .. } => Some(summary),
            _ => None,
        })
    }

    fn push_block(&mut self, segment: Segment) {
        match self.segments.last_mut() {
            None => self.segments.push(Segment::Text(NEW_FILE_HEADER.to_string())),
            Some(Segment::Text(t)) if !t.ends_with('\n') => t.push('\n'),
            _ => {}
        }
        self.segments.push(Segment::Text("\n".to_string()));
        self.segments.push(segment);
    }

    /// Appends a loaded entry and returns its id. Existing entries are never
    /// reordered or changed.
    pub fn record_entry(&mut self, draft: EntryDraft, now: Millis) -> Result<String, MemoryError> {
        let reason = draft.reason.trim().to_string();
        if reason.is_empty() {
            return Err(MemoryError::EmptyReason);
        }
        let mut entry_id = ids::new_id();
        while self.entry(&entry_id).is_some() {
            entry_id = ids::new_id();
        }
        let (before, before_truncated) = cap(draft.before);
        let (after, after_truncated) = cap(draft.after);
        let entry = MemoryEntry {
            entry_id: entry_id.clone(),
            kind: draft.kind,
            reason,
            before,
            after,
            created_at: now,
            loaded: true,
            before_truncated,
            after_truncated,
        };
        self.push_block(Segment::Entry { entry, raw: None });
        Ok(entry_id)
    }

    pub fn set_loaded(&mut self, entry_id: &str, loaded: bool) -> Result<(), MemoryError> {
        for seg in &mut self.segments {
            if let Segment::Entry { entry, .. } = seg {
                if entry.entry_id == entry_id {
                    entry.loaded = loaded;
                    return Ok(());
                }
            }
        }
        Err(MemoryError::UnknownEntry(entry_id.to_string()))
    }

    /// Commits an approved compaction review: appends the final summary and
    /// applies the load/unload decisions. Returns `false` if this outcome was
    /// already committed.
    pub fn commit_compaction(&mut self, outcome: &ReviewOutcome, now: Millis) -> Result<bool, MemoryError> {
        let ArtifactPayload::Memory(artifact) = &outcome.final_artifact else {
            return Err(MemoryError::KindMismatch(outcome.final_artifact.kind()));
        };
        if outcome.decision != Decision::Approved {
            return Err(MemoryError::NotApproved(outcome.decision));
        }
        if self.summaries().any(|s| s.summary_id == outcome.session_id) {
            return Ok(false);
        }
        let mut next = self.clone();
        for logged in &outcome.action_log {
            let (entry_id, loaded) = match &logged.action.op {
                ActionOp::LoadEntry { entry_id } => (entry_id, true),
                ActionOp::UnloadEntry { entry_id } => (entry_id, false),
                _ => continue,
            };
            next.set_loaded(entry_id, loaded)?;
        }
        next.push_block(Segment::Summary {
            summary: Summary { summary_id: outcome.session_id.clone(), text: artifact.summary_draft.clone(), created_at: now },
            raw: None,
        });
        *self = next;
        Ok(true)
    }
}

/// Builds the memory-review proposal for an agent-drafted summary.
pub fn begin_compaction(summary_draft: &str, touched: Vec<MemoryEntry>, agent_session_id: &str) -> Result<Proposal, MemoryError> {
    if summary_draft.trim().is_empty() {
        return Err(MemoryError::EmptyDraft);
    }
    Ok(Proposal {
        kind: ProposalKind::Memory,
        title: "Review memory summary".into(),
        agent_session_id: agent_session_id.into(),
        created_at: 0,
        payload: ArtifactPayload::Memory(MemoryArtifact { summary_draft: summary_draft.into(), touched_entries: touched }),
    })
}

/// Preference drafts for every reason-bearing action in a session's log:
/// rewrite requests, rejects with a reason, and trajectory guidance.
///
/// A rewrite request aimed at a paragraph or step carries that element's
/// text at request time as `before` and its final text as `after`.
pub fn preference_drafts(session: &ReviewSession) -> Vec<EntryDraft> {
    let mut drafts = Vec::new();
    let mut artifact = session.proposal.payload.clone();
    for event in &session.event_log {
        match &event.body {
            EventBody::Action { action } => {
                if let Some(reason) = action.op.preference_reason() {
                    let (before, after) = match &action.op {
                        ActionOp::RewriteRequest { paragraph_id: Some(target), .. } => {
                            (element_text(&artifact, target), element_text(&session.current_artifact, target))
                        }
                        ActionOp::AnnotateStep { step_id, .. } => (element_text(&artifact, step_id), None),
                        _ => (None, None),
                    };
                    drafts.push(EntryDraft { kind: session.kind, reason: reason.to_string(), before, after });
                }
                if let Ok(next) = crate::model::reduce(&artifact, action) {
                    artifact = next;
                }
            }
            EventBody::AgentUpdate { artifact: updated, .. } => artifact = updated.clone(),
            EventBody::StateChange { .. } => {}
        }
    }
    drafts
}

fn element_text(artifact: &ArtifactPayload, id: &str) -> Option<String> {
    match artifact {
        ArtifactPayload::Email(e) => e.draft.iter().find(|p| p.paragraph_id == id).map(|p| p.text.clone()),
        ArtifactPayload::Plan(p) => p.steps.iter().find(|s| s.step_id == id).map(|s| s.description.clone()),
        ArtifactPayload::Trajectory(t) => t.steps.iter().find(|s| s.step_id == id).map(|s| s.detail.clone()),
        _ => None,
    }
}

/// A memory store bound to a file. Every operation re-reads the file, so
/// hand edits made between operations are picked up, and every write goes
/// through a temp file and a rename.
#[derive(Debug, Clone)]
pub struct MemoryFile {
    path: PathBuf,
}

impl MemoryFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        MemoryFile { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Reads the file; a missing file is an empty store.
    pub fn load(&self) -> Result<MemoryStore, MemoryError> {
        match fs::read_to_string(&self.path) {
            Ok(text) => MemoryStore::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(MemoryStore::default()),
            Err(source) => Err(MemoryError::Io { path: self.path.clone(), source }),
        }
    }

    pub fn save(&self, store: &MemoryStore) -> Result<(), MemoryError> {
        self.save_with_hook(store, |_| Ok(()))
    }

    /// Writes via temp file + rename. `before_rename` runs after the temp
    /// file is durable and before it replaces the target; an error from it
    /// aborts the save and leaves the previous file untouched.
    pub fn save_with_hook(
        &self,
        store: &MemoryStore,
        before_rename: impl FnOnce(&Path) -> io::Result<()>,
    ) -> Result<(), MemoryError> {
        let io_err = |source| MemoryError::Io { path: self.path.clone(), source };
        let dir = match self.path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(io_err)?;
        let file_name = self.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = dir.join(format!(".{file_name}.{}.tmp", ids::new_id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(store.serialize().as_bytes())?;
            f.sync_all()?;
            before_rename(&tmp)?;
            fs::rename(&tmp, &self.path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result.map_err(io_err)
    }

    fn update<T>(&self, f: impl FnOnce(&mut MemoryStore) -> Result<T, MemoryError>) -> Result<T, MemoryError> {
        let mut store = self.load()?;
        let out = f(&mut store)?;
        self.save(&store)?;
        Ok(out)
    }

    pub fn record_entry(&self, draft: EntryDraft, now: Millis) -> Result<String, MemoryError> {
        self.update(|s| s.record_entry(draft, now))
    }

    pub fn record_all(&self, drafts: Vec<EntryDraft>, now: Millis) -> Result<Vec<String>, MemoryError> {
        if drafts.is_empty() {
            return Ok(Vec::new());
        }
        self.update(|s| drafts.into_iter().map(|d| s.record_entry(d, now)).collect())
    }

    pub fn set_loaded(&self, entry_id: &str, loaded: bool) -> Result<(), MemoryError> {
        self.update(|s| s.set_loaded(entry_id, loaded))
    }

    pub fn commit_compaction(&self, outcome: &ReviewOutcome, now: Millis) -> Result<bool, MemoryError> {
        let mut store = self.load()?;
        let changed = store.commit_compaction(outcome, now)?;
        if changed {
            self.save(&store)?;
        }
        Ok(changed)
    }
}
