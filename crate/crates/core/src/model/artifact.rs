//! Artifact payloads, one per proposal kind.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::Millis;

/// The six kinds of artifact an agent can submit for review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    Email,
    Plan,
    Code,
    Memory,
    Trajectory,
    Approval,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 6] = [
        ProposalKind::Email,
        ProposalKind::Plan,
        ProposalKind::Code,
        ProposalKind::Memory,
        ProposalKind::Trajectory,
        ProposalKind::Approval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProposalKind::Email => "email",
            ProposalKind::Plan => "plan",
            ProposalKind::Code => "code",
            ProposalKind::Memory => "memory",
            ProposalKind::Trajectory => "trajectory",
            ProposalKind::Approval => "approval",
        }
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown proposal kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ProposalKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProposalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// The artifact under review. Serialized with an inline `kind` tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArtifactPayload {
    Email(EmailArtifact),
    Plan(PlanArtifact),
    Code(CodeArtifact),
    Memory(MemoryArtifact),
    Trajectory(TrajectoryArtifact),
    Approval(ApprovalArtifact),
}

impl ArtifactPayload {
    pub fn kind(&self) -> ProposalKind {
        match self {
            ArtifactPayload::Email(_) => ProposalKind::Email,
            ArtifactPayload::Plan(_) => ProposalKind::Plan,
            ArtifactPayload::Code(_) => ProposalKind::Code,
            ArtifactPayload::Memory(_) => ProposalKind::Memory,
            ArtifactPayload::Trajectory(_) => ProposalKind::Trajectory,
            ArtifactPayload::Approval(_) => ProposalKind::Approval,
        }
    }
}

// ---- email ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmailArtifact {
    pub inbox: Vec<InboxItem>,
    #[serde(default)]
    pub selected_message: Option<FullMessage>,
    pub draft: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InboxItem {
    pub message_id: String,
    pub from: String,
    pub subject: String,
    pub received_at: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullMessage {
    pub message_id: String,
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paragraph {
    pub paragraph_id: String,
    pub text: String,
}

// ---- plan ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanArtifact {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    pub step_id: String,
    pub description: String,
    pub step_type: PlanStepType,
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStepType {
    ToolCall,
    FileOp,
    CodeExec,
    Analysis,
    Other,
}

// ---- code ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeArtifact {
    pub command: String,
    pub explanation: String,
    pub files: Vec<FileChange>,
    /// Unified diff text as submitted by the agent. When present, validation
    /// parses it and fills in (or cross-checks) the per-file hunks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<String>,
    #[serde(with = "decision_list")]
    pub hunk_decisions: BTreeMap<HunkKey, HunkDecision>,
    pub line_annotations: Vec<LineAnnotation>,
}

/// One file touched by a change.
///
/// When contents travel with the change, `old_content` absent means the file
/// is added and `new_content` absent means it is deleted. A modification may
/// omit both, in which case only the hunks are known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileChange {
    pub path: String,
    pub status: FileStatus,
    #[serde(default)]
    pub old_content: Option<String>,
    #[serde(default)]
    pub new_content: Option<String>,
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileStatus {
    Added,
    Deleted,
    Modified,
}

impl FileChange {
    /// Whether the shipped contents agree with `status`.
    pub fn contents_match_status(&self) -> bool {
        match self.status {
            FileStatus::Added => self.old_content.is_none(),
            FileStatus::Deleted => self.new_content.is_none() && self.old_content.is_some(),
            FileStatus::Modified => self.old_content.is_some() == self.new_content.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    pub lines: Vec<HunkLine>,
    /// The last old-side line of this hunk has no trailing newline.
    #[serde(default, skip_serializing_if = "is_false")]
    pub old_missing_newline: bool,
    /// The last new-side line of this hunk has no trailing newline.
    #[serde(default, skip_serializing_if = "is_false")]
    pub new_missing_newline: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Hunk {
    pub fn old_side_count(&self) -> usize {
        self.lines.iter().filter(|l| l.tag != LineTag::Add).count()
    }

    pub fn new_side_count(&self) -> usize {
        self.lines.iter().filter(|l| l.tag != LineTag::Del).count()
    }

    /// Zero-based index of the first original line this hunk replaces.
    pub fn old_index(&self) -> usize {
        if self.old_len == 0 {
            self.old_start as usize
        } else {
            self.old_start.saturating_sub(1) as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HunkLine {
    pub tag: LineTag,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineTag {
    Context,
    Add,
    Del,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HunkKey {
    pub path: String,
    pub hunk_index: usize,
}

impl HunkKey {
    pub fn new(path: impl Into<String>, hunk_index: usize) -> Self {
        HunkKey { path: path.into(), hunk_index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HunkDecision {
    Approved,
    Rejected,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineAnnotation {
    pub path: String,
    pub hunk_index: usize,
    pub line_offset: usize,
    pub note: String,
}

/// `hunk_decisions` travels as a list of `{path, hunk_index, decision}`
/// sorted by key, since JSON object keys cannot be tuples.
mod decision_list {
    use super::*;
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Entry {
        path: String,
        hunk_index: usize,
        decision: HunkDecision,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<HunkKey, HunkDecision>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(map.len()))?;
        for (key, decision) in map {
            seq.serialize_element(&Entry {
                path: key.path.clone(),
                hunk_index: key.hunk_index,
                decision: *decision,
            })?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<HunkKey, HunkDecision>, D::Error> {
        let entries = Vec::<Entry>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for e in entries {
            let key = HunkKey::new(e.path, e.hunk_index);
            if map.insert(key.clone(), e.decision).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate hunk decision for {}#{}",
                    key.path, key.hunk_index
                )));
            }
        }
        Ok(map)
    }
}

// ---- memory ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryArtifact {
    pub summary_draft: String,
    pub touched_entries: Vec<MemoryEntry>,
}

/// One reason-tagged preference record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryEntry {
    pub entry_id: String,
    pub kind: ProposalKind,
    pub reason: String,
    #[serde(default)]
    pub before: Option<String>,
    #[serde(default)]
    pub after: Option<String>,
    pub created_at: Millis,
    pub loaded: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub before_truncated: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub after_truncated: bool,
}

// ---- trajectory ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryArtifact {
    pub steps: Vec<TrajStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajStep {
    pub step_id: String,
    pub step_type: TrajStepType,
    pub status: TrajStatus,
    pub detail: String,
    #[serde(default)]
    pub tokens: Option<u64>,
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajStepType {
    ToolCall,
    ToolResult,
    Error,
    Retry,
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajStatus {
    Ok,
    Failed,
    Recovered,
}

// ---- approval ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApprovalArtifact {
    pub prompt: String,
    pub options: Vec<ApprovalOption>,
    #[serde(default)]
    pub selected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApprovalOption {
    pub option_id: String,
    pub label: String,
}

/// A typed artifact submitted by an agent for review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposal {
    pub kind: ProposalKind,
    pub title: String,
    pub agent_session_id: String,
    #[serde(default)]
    pub created_at: Millis,
    pub payload: ArtifactPayload,
}
