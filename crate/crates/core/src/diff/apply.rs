use std::collections::{BTreeMap, BTreeSet};

use super::{split_lines, ChangeSet};
use crate::model::{FileChange, FileStatus, Hunk, HunkDecision, HunkKey, LineAnnotation, LineTag};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("hunk {hunk}: context mismatch at original line {line}")]
    ContextMismatch { hunk: usize, line: usize },
    #[error("hunk index {index} out of range ({count} hunks)")]
    SelectionOutOfRange { index: usize, count: usize },
}

/// Applies exactly the selected hunks to `original`.
///
/// Hunk coordinates refer to the original text, so any subset can be applied
/// without re-basing. Hunks are applied in list order whatever the iteration
/// order of `selection`.
pub fn apply_hunks(original: &str, hunks: &[Hunk], selection: &BTreeSet<usize>) -> Result<String, ApplyError> {
    if let Some(&index) = selection.iter().find(|&&i| i >= hunks.len()) {
        return Err(ApplyError::SelectionOutOfRange { index, count: hunks.len() });
    }
    let orig = split_lines(original);
    let mut out = String::with_capacity(original.len());
    let mut cursor = 0usize;
    for (idx, hunk) in hunks.iter().enumerate() {
        if !selection.contains(&idx) {
            continue;
        }
        let start = hunk.old_index();
        if start < cursor || start > orig.len() {
            return Err(ApplyError::ContextMismatch { hunk: idx, line: start + 1 });
        }
        orig[cursor..start].iter().for_each(|l| out.push_str(l));

        let old_side: Vec<&str> = hunk.lines.iter().filter(|l| l.tag != LineTag::Add).map(|l| l.text.as_str()).collect();
        for (k, expected) in old_side.iter().enumerate() {
            let at = start + k;
            let Some(actual) = orig.get(at) else {
                return Err(ApplyError::ContextMismatch { hunk: idx, line: at + 1 });
            };
            let (body, has_newline) = match actual.strip_suffix('\n') {
                Some(body) => (body, true),
                None => (*actual, false),
            };
            let want_newline = !(hunk.old_missing_newline && k + 1 == old_side.len());
            if body != *expected || has_newline != want_newline {
                return Err(ApplyError::ContextMismatch { hunk: idx, line: at + 1 });
            }
        }

        let new_side: Vec<&str> = hunk.lines.iter().filter(|l| l.tag != LineTag::Del).map(|l| l.text.as_str()).collect();
        for (k, text) in new_side.iter().enumerate() {
            out.push_str(text);
            if !(hunk.new_missing_newline && k + 1 == new_side.len()) {
                out.push('\n');
            }
        }
        cursor = start + old_side.len();
    }
    orig[cursor..].iter().for_each(|l| out.push_str(l));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaterializeError {
    #[error("{path}#{hunk_index}: decision still pending")]
    Pending { path: String, hunk_index: usize },
    #[error("{path}#{hunk_index}: decision references no hunk")]
    DanglingKey { path: String, hunk_index: usize },
    #[error("{path}: {source}")]
    Apply { path: String, source: ApplyError },
}

/// The approved part of a change set and the rejected remainder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    /// What the agent may apply.
    pub approved: ChangeSet,
    /// Original keys of the approved hunks, in output order.
    pub approved_keys: Vec<HunkKey>,
    /// What goes back to the agent for rework.
    pub rejected: ChangeSet,
    pub rejected_keys: Vec<HunkKey>,
    /// Reviewer line notes attached to rejected hunks, keyed by original index.
    pub rejected_notes: Vec<LineAnnotation>,
}

/// Splits a change set by per-hunk decisions. Every hunk needs a final
/// (approved or rejected) decision; missing keys count as pending.
pub fn materialize_decisions(
    changes: &ChangeSet,
    decisions: &BTreeMap<HunkKey, HunkDecision>,
    annotations: &[LineAnnotation],
) -> Result<Partition, MaterializeError> {
    for key in decisions.keys() {
        let exists = changes.files.iter().any(|f| f.path == key.path && key.hunk_index < f.hunks.len());
        if !exists {
            return Err(MaterializeError::DanglingKey { path: key.path.clone(), hunk_index: key.hunk_index });
        }
    }
    let mut partition = Partition::default();
    for file in &changes.files {
        let mut approved = BTreeSet::new();
        for idx in 0..file.hunks.len() {
            let key = HunkKey::new(file.path.clone(), idx);
            match decisions.get(&key).copied().unwrap_or(HunkDecision::Pending) {
                HunkDecision::Approved => {
                    approved.insert(idx);
                }
                HunkDecision::Rejected => {}
                HunkDecision::Pending => {
                    return Err(MaterializeError::Pending { path: file.path.clone(), hunk_index: idx })
                }
            }
        }
        let rejected: BTreeSet<usize> = (0..file.hunks.len()).filter(|i| !approved.contains(i)).collect();

        if !approved.is_empty() {
            partition.approved.files.push(partial_file(file, &approved)?);
            partition.approved_keys.extend(approved.iter().map(|&i| HunkKey::new(file.path.clone(), i)));
        }
        if !rejected.is_empty() {
            let mut remainder = file.clone();
            remainder.hunks = subset(&file.hunks, &rejected);
            partition.rejected.files.push(remainder);
            partition.rejected_keys.extend(rejected.iter().map(|&i| HunkKey::new(file.path.clone(), i)));
            partition.rejected_notes.extend(
                annotations
                    .iter()
                    .filter(|a| a.path == file.path && rejected.contains(&a.hunk_index))
                    .cloned(),
            );
        }
    }
    Ok(partition)
}

/// The selected hunks with new-side starts shifted as if only they were
/// applied to the original.
fn subset(hunks: &[Hunk], selection: &BTreeSet<usize>) -> Vec<Hunk> {
    let mut skipped: i64 = 0;
    let mut out = Vec::with_capacity(selection.len());
    for (i, hunk) in hunks.iter().enumerate() {
        if selection.contains(&i) {
            let mut h = hunk.clone();
            h.new_start = (i64::from(h.new_start) - skipped).max(0) as u32;
            out.push(h);
        } else {
            skipped += i64::from(hunk.new_len) - i64::from(hunk.old_len);
        }
    }
    out
}

fn partial_file(file: &FileChange, selection: &BTreeSet<usize>) -> Result<FileChange, MaterializeError> {
    let mut out = file.clone();
    out.hunks = subset(&file.hunks, selection);
    if selection.len() == file.hunks.len() {
        return Ok(out);
    }
    let apply = |base: &str| {
        apply_hunks(base, &file.hunks, selection)
            .map_err(|source| MaterializeError::Apply { path: file.path.clone(), source })
    };
    match (&file.old_content, file.status) {
        (Some(old), _) => {
            out.new_content = Some(apply(old)?);
            out.status = FileStatus::Modified;
        }
        (None, FileStatus::Added) => out.new_content = Some(apply("")?),
        (None, _) => {}
    }
    Ok(out)
}
