//! The pure reducer applying one review action to an artifact.

use std::collections::HashSet;

use super::action::{ActionOp, ReviewAction};
use super::artifact::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReduceError {
    #[error("action `{action}` is not applicable to {kind} artifacts")]
    Incompatible { action: &'static str, kind: ProposalKind },
    #[error("{path}: no {what} with id `{id}`")]
    NotFound { path: String, what: &'static str, id: String },
    #[error("new_order: not a permutation of the current step ids")]
    NotPermutation,
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ReduceError {
    /// The request field the error refers to.
    pub fn path(&self) -> &str {
        match self {
            ReduceError::Incompatible { .. } => "type",
            ReduceError::NotFound { path, .. } | ReduceError::Invalid { path, .. } => path,
            ReduceError::NotPermutation => "new_order",
        }
    }
}

fn not_found(path: &str, what: &'static str, id: &str) -> ReduceError {
    ReduceError::NotFound { path: path.to_string(), what, id: id.to_string() }
}

/// Applies `action` to `artifact`, returning the new artifact.
///
/// `approve`, `reject` and `rewrite_request` are recorded intents and leave
/// content untouched, though their references are still checked.
pub fn reduce(artifact: &ArtifactPayload, action: &ReviewAction) -> Result<ArtifactPayload, ReduceError> {
    let op = &action.op;
    let kind = artifact.kind();
    if !op.is_compatible(kind) {
        return Err(ReduceError::Incompatible { action: op.name(), kind });
    }
    let mut next = artifact.clone();
    match (&mut next, op) {
        (_, ActionOp::Approve {} | ActionOp::Reject { .. }) => {}

        (ArtifactPayload::Email(email), ActionOp::EditParagraph { paragraph_id, new_text }) => {
            let para = email
                .draft
                .iter_mut()
                .find(|p| &p.paragraph_id == paragraph_id)
                .ok_or_else(|| not_found("paragraph_id", "paragraph", paragraph_id))?;
            para.text = new_text.clone();
        }
        (ArtifactPayload::Email(email), ActionOp::DeleteParagraph { paragraph_id }) => {
            let idx = email
                .draft
                .iter()
                .position(|p| &p.paragraph_id == paragraph_id)
                .ok_or_else(|| not_found("paragraph_id", "paragraph", paragraph_id))?;
            email.draft.remove(idx);
        }
        (artifact, ActionOp::RewriteRequest { paragraph_id, reason }) => {
            if reason.trim().is_empty() {
                return Err(ReduceError::Invalid { path: "reason".into(), message: "must be non-empty".into() });
            }
            if let Some(target) = paragraph_id {
                let exists = match artifact {
                    ArtifactPayload::Email(e) => e.draft.iter().any(|p| &p.paragraph_id == target),
                    ArtifactPayload::Plan(p) => p.steps.iter().any(|s| &s.step_id == target),
                    ArtifactPayload::Code(c) => c.files.iter().any(|f| &f.path == target),
                    _ => false,
                };
                if !exists {
                    return Err(not_found("paragraph_id", "rewrite target", target));
                }
            }
        }

        (ArtifactPayload::Plan(plan), ActionOp::EditStep { step_id, new_description }) => {
            find_step(plan, step_id)?.description = new_description.clone();
        }
        (ArtifactPayload::Plan(plan), ActionOp::AddConstraint { step_id, constraint }) => {
            if constraint.trim().is_empty() {
                return Err(ReduceError::Invalid { path: "constraint".into(), message: "must be non-empty".into() });
            }
            find_step(plan, step_id)?.constraints.push(constraint.clone());
        }
        (ArtifactPayload::Plan(plan), ActionOp::RemoveStep { step_id }) => {
            let idx = plan
                .steps
                .iter()
                .position(|s| &s.step_id == step_id)
                .ok_or_else(|| not_found("step_id", "step", step_id))?;
            plan.steps.remove(idx);
        }
        (ArtifactPayload::Plan(plan), ActionOp::ReorderSteps { new_order }) => {
            if new_order.len() != plan.steps.len() {
                return Err(ReduceError::NotPermutation);
            }
            let wanted: HashSet<&String> = new_order.iter().collect();
            if wanted.len() != new_order.len() {
                return Err(ReduceError::NotPermutation);
            }
            let mut reordered = Vec::with_capacity(plan.steps.len());
            for id in new_order {
                let step = plan.steps.iter().find(|s| &s.step_id == id).ok_or(ReduceError::NotPermutation)?;
                reordered.push(step.clone());
            }
            plan.steps = reordered;
        }

        (ArtifactPayload::Code(code), ActionOp::SetHunkDecision { path, hunk_index, decision }) => {
            hunk_of(code, path, *hunk_index)?;
            code.hunk_decisions.insert(HunkKey::new(path.clone(), *hunk_index), *decision);
        }
        (ArtifactPayload::Code(code), ActionOp::AnnotateLine { path, hunk_index, line_offset, note }) => {
            let hunk = hunk_of(code, path, *hunk_index)?;
            if *line_offset >= hunk.lines.len() {
                return Err(ReduceError::Invalid {
                    path: "line_offset".into(),
                    message: format!("hunk has {} lines", hunk.lines.len()),
                });
            }
            code.line_annotations.push(LineAnnotation {
                path: path.clone(),
                hunk_index: *hunk_index,
                line_offset: *line_offset,
                note: note.clone(),
            });
        }

        (ArtifactPayload::Memory(memory), ActionOp::EditSummary { new_text }) => {
            if new_text.trim().is_empty() {
                return Err(ReduceError::Invalid { path: "new_text".into(), message: "summary must be non-empty".into() });
            }
            memory.summary_draft = new_text.clone();
        }
        (ArtifactPayload::Memory(memory), ActionOp::LoadEntry { entry_id }) => {
            find_entry(memory, entry_id)?.loaded = true;
        }
        (ArtifactPayload::Memory(memory), ActionOp::UnloadEntry { entry_id }) => {
            find_entry(memory, entry_id)?.loaded = false;
        }

        (ArtifactPayload::Trajectory(traj), ActionOp::AnnotateStep { step_id, guidance }) => {
            if guidance.trim().is_empty() {
                return Err(ReduceError::Invalid { path: "guidance".into(), message: "must be non-empty".into() });
            }
            let step = traj
                .steps
                .iter_mut()
                .find(|s| &s.step_id == step_id)
                .ok_or_else(|| not_found("step_id", "step", step_id))?;
            step.annotations.push(guidance.clone());
        }

        (ArtifactPayload::Approval(approval), ActionOp::SelectOption { option_id }) => {
            if !approval.options.iter().any(|o| &o.option_id == option_id) {
                return Err(not_found("option_id", "option", option_id));
            }
            approval.selected = Some(option_id.clone());
        }

        // compatibility was checked above
        (_, op) => return Err(ReduceError::Incompatible { action: op.name(), kind }),
    }
    Ok(next)
}

fn find_step<'a>(plan: &'a mut PlanArtifact, step_id: &str) -> Result<&'a mut PlanStep, ReduceError> {
    plan.steps
        .iter_mut()
        .find(|s| s.step_id == step_id)
        .ok_or_else(|| not_found("step_id", "step", step_id))
}

fn find_entry<'a>(memory: &'a mut MemoryArtifact, entry_id: &str) -> Result<&'a mut MemoryEntry, ReduceError> {
    memory
        .touched_entries
        .iter_mut()
        .find(|e| e.entry_id == entry_id)
        .ok_or_else(|| not_found("entry_id", "entry", entry_id))
}

fn hunk_of<'a>(code: &'a CodeArtifact, path: &str, hunk_index: usize) -> Result<&'a Hunk, ReduceError> {
    let file = code
        .files
        .iter()
        .find(|f| f.path == path)
        .ok_or_else(|| not_found("path", "file", path))?;
    file.hunks.get(hunk_index).ok_or_else(|| ReduceError::Invalid {
        path: "hunk_index".into(),
        message: format!("{path} has {} hunks", file.hunks.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn act(op: ActionOp) -> ReviewAction {
        ReviewAction::new(op)
    }

    #[test]
    fn add_constraint_appends_verbatim() {
        let plan = samples::resnet_plan();
        let text = "Save checkpoint every 10 epochs + best model by val accuracy";
        let out = reduce(&plan, &act(ActionOp::AddConstraint { step_id: "training-loop".into(), constraint: text.into() }))
            .unwrap();
        let ArtifactPayload::Plan(p) = out else { panic!() };
        let step = p.steps.iter().find(|s| s.step_id == "training-loop").unwrap();
        assert_eq!(step.constraints.last().unwrap(), text);
    }

    #[test]
    fn intents_leave_content_untouched() {
        for artifact in samples::all_artifacts() {
            let approved = reduce(&artifact, &act(ActionOp::Approve {})).unwrap();
            assert_eq!(approved, artifact);
            let rejected = reduce(&artifact, &act(ActionOp::Reject { reason: Some("no".into()) })).unwrap();
            assert_eq!(rejected, artifact);
        }
    }

    #[test]
    fn incompatible_pairs_fail() {
        let email = samples::formal_email();
        let err = reduce(&email, &act(ActionOp::EditStep { step_id: "x".into(), new_description: "y".into() }))
            .unwrap_err();
        assert!(matches!(err, ReduceError::Incompatible { action: "edit_step", .. }));
    }

    #[test]
    fn dangling_ids_fail() {
        let email = samples::formal_email();
        let err = reduce(&email, &act(ActionOp::DeleteParagraph { paragraph_id: "nope".into() })).unwrap_err();
        assert_eq!(err.path(), "paragraph_id");
        let plan = samples::resnet_plan();
        let err = reduce(&plan, &act(ActionOp::ReorderSteps { new_order: vec!["setup".into()] })).unwrap_err();
        assert_eq!(err, ReduceError::NotPermutation);
    }

    #[test]
    fn deleting_every_paragraph_is_allowed() {
        let mut email = samples::formal_email();
        let ids: Vec<String> = match &email {
            ArtifactPayload::Email(e) => e.draft.iter().map(|p| p.paragraph_id.clone()).collect(),
            _ => unreachable!(),
        };
        for id in ids {
            email = reduce(&email, &act(ActionOp::DeleteParagraph { paragraph_id: id })).unwrap();
        }
        let ArtifactPayload::Email(e) = &email else { panic!() };
        assert!(e.draft.is_empty());
        assert!(reduce(&email, &act(ActionOp::Approve {})).is_ok());
    }

    #[test]
    fn rewrite_request_needs_reason() {
        let email = samples::formal_email();
        let err = reduce(&email, &act(ActionOp::RewriteRequest { paragraph_id: None, reason: "  ".into() })).unwrap_err();
        assert_eq!(err.path(), "reason");
    }

    #[test]
    fn select_option_requires_known_option() {
        let approval = samples::deploy_approval();
        assert!(reduce(&approval, &act(ActionOp::SelectOption { option_id: "nope".into() })).is_err());
        let out = reduce(&approval, &act(ActionOp::SelectOption { option_id: "staging".into() })).unwrap();
        let ArtifactPayload::Approval(a) = out else { panic!() };
        assert_eq!(a.selected.as_deref(), Some("staging"));
    }
}
