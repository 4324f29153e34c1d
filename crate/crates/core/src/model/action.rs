//! Review actions and outcomes.

use serde::{Deserialize, Serialize};

use super::artifact::{ArtifactPayload, HunkDecision, ProposalKind};
use crate::ids::Millis;

/// One human intervention on an artifact.
///
/// `action_id` and `timestamp` are assigned by the server on receipt; clients
/// may omit them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewAction {
    #[serde(default)]
    pub action_id: String,
    #[serde(flatten)]
    pub op: ActionOp,
    #[serde(default)]
    pub reviewer_note: Option<String>,
    #[serde(default)]
    pub timestamp: Millis,
}

impl ReviewAction {
    pub fn new(op: ActionOp) -> Self {
        ReviewAction { action_id: String::new(), op, reviewer_note: None, timestamp: 0 }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.reviewer_note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionOp {
    Approve {},
    Reject {
        #[serde(default)]
        reason: Option<String>,
    },
    EditParagraph {
        paragraph_id: String,
        new_text: String,
    },
    DeleteParagraph {
        paragraph_id: String,
    },
    RewriteRequest {
        #[serde(default)]
        paragraph_id: Option<String>,
        reason: String,
    },
    EditStep {
        step_id: String,
        new_description: String,
    },
    ReorderSteps {
        new_order: Vec<String>,
    },
    RemoveStep {
        step_id: String,
    },
    AddConstraint {
        step_id: String,
        constraint: String,
    },
    SetHunkDecision {
        path: String,
        hunk_index: usize,
        decision: HunkDecision,
    },
    AnnotateLine {
        path: String,
        hunk_index: usize,
        line_offset: usize,
        note: String,
    },
    EditSummary {
        new_text: String,
    },
    LoadEntry {
        entry_id: String,
    },
    UnloadEntry {
        entry_id: String,
    },
    AnnotateStep {
        step_id: String,
        guidance: String,
    },
    SelectOption {
        option_id: String,
    },
}

/// Every action variant name, in declaration order.
pub const ACTION_NAMES: [&str; 16] = [
    "approve",
    "reject",
    "edit_paragraph",
    "delete_paragraph",
    "rewrite_request",
    "edit_step",
    "reorder_steps",
    "remove_step",
    "add_constraint",
    "set_hunk_decision",
    "annotate_line",
    "edit_summary",
    "load_entry",
    "unload_entry",
    "annotate_step",
    "select_option",
];

/// Action variants a reviewer may apply to each artifact kind.
pub fn allowed_actions(kind: ProposalKind) -> &'static [&'static str] {
    match kind {
        ProposalKind::Email => &["edit_paragraph", "delete_paragraph", "rewrite_request", "approve", "reject"],
        ProposalKind::Plan => &[
            "edit_step",
            "reorder_steps",
            "remove_step",
            "add_constraint",
            "rewrite_request",
            "approve",
            "reject",
        ],
        ProposalKind::Code => &["set_hunk_decision", "annotate_line", "rewrite_request", "approve", "reject"],
        ProposalKind::Memory => &["edit_summary", "load_entry", "unload_entry", "approve", "reject"],
        ProposalKind::Trajectory => &["annotate_step", "approve", "reject"],
        ProposalKind::Approval => &["select_option", "approve", "reject"],
    }
}

impl ActionOp {
    pub fn name(&self) -> &'static str {
        match self {
            ActionOp::Approve {} => "approve",
            ActionOp::Reject { .. } => "reject",
            ActionOp::EditParagraph { .. } => "edit_paragraph",
            ActionOp::DeleteParagraph { .. } => "delete_paragraph",
            ActionOp::RewriteRequest { .. } => "rewrite_request",
            ActionOp::EditStep { .. } => "edit_step",
            ActionOp::ReorderSteps { .. } => "reorder_steps",
            ActionOp::RemoveStep { .. } => "remove_step",
            ActionOp::AddConstraint { .. } => "add_constraint",
            ActionOp::SetHunkDecision { .. } => "set_hunk_decision",
            ActionOp::AnnotateLine { .. } => "annotate_line",
            ActionOp::EditSummary { .. } => "edit_summary",
            ActionOp::LoadEntry { .. } => "load_entry",
            ActionOp::UnloadEntry { .. } => "unload_entry",
            ActionOp::AnnotateStep { .. } => "annotate_step",
            ActionOp::SelectOption { .. } => "select_option",
        }
    }

    pub fn is_compatible(&self, kind: ProposalKind) -> bool {
        allowed_actions(kind).contains(&self.name())
    }

    /// The human-provided reason this action carries, if it is one that
    /// feeds preference memory.
    pub fn preference_reason(&self) -> Option<&str> {
        match self {
            ActionOp::RewriteRequest { reason, .. } => Some(reason),
            ActionOp::Reject { reason: Some(reason) } if !reason.trim().is_empty() => Some(reason),
            ActionOp::AnnotateStep { guidance, .. } => Some(guidance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approved,
    Rejected,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedAction {
    pub sequence_number: u64,
    pub action: ReviewAction,
}

/// The terminal result handed back to the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewOutcome {
    pub session_id: String,
    pub decision: Decision,
    pub final_artifact: ArtifactPayload,
    pub action_log: Vec<LoggedAction>,
    pub rewrite_reasons: Vec<String>,
    pub revision: u64,
}
