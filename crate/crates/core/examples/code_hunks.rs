//! Per-hunk review of a code change: approve some hunks, reject one with a
//! line note, and split the change into what may be applied and what goes
//! back to the agent.

use std::collections::BTreeSet;

use agentclick::diff::{apply_hunks, materialize_decisions, render_unified_diff, ChangeSet};
use agentclick::model::*;
use agentclick::samples;

fn main() -> anyhow::Result<()> {
    let ArtifactPayload::Code(code) = samples::code_change_parsed() else { unreachable!() };
    for f in &code.files {
        println!("{} ({:?}): {} hunk(s)", f.path, f.status, f.hunks.len());
    }

    let mut artifact = ArtifactPayload::Code(code.clone());
    let mut ops = Vec::new();
    for f in &code.files {
        for i in 0..f.hunks.len() {
            let decision = if f.path == "src/train.py" && i == 0 { HunkDecision::Rejected } else { HunkDecision::Approved };
            ops.push(ActionOp::SetHunkDecision { path: f.path.clone(), hunk_index: i, decision });
        }
    }
    ops.push(ActionOp::AnnotateLine {
        path: "src/train.py".into(),
        hunk_index: 0,
        line_offset: 0,
        note: "keep the import list sorted".into(),
    });
    for op in ops {
        artifact = reduce(&artifact, &ReviewAction::new(op))?;
    }
    let ArtifactPayload::Code(reviewed) = artifact else { unreachable!() };

    let changes = ChangeSet { files: reviewed.files.clone() };
    let split = materialize_decisions(&changes, &reviewed.hunk_decisions, &reviewed.line_annotations)?;
    println!("\napproved {:?}\n{}", split.approved_keys, render_unified_diff(&split.approved));
    println!("rejected {:?}\n{}", split.rejected_keys, render_unified_diff(&split.rejected));
    for note in &split.rejected_notes {
        println!("note on {}#{}+{}: {}", note.path, note.hunk_index, note.line_offset, note.note);
    }

    let train = &changes.files[0];
    let partial = apply_hunks(train.old_content.as_deref().unwrap_or(""), &train.hunks, &BTreeSet::from([1]))?;
    println!("\nsrc/train.py with only hunk 1 applied:\n{partial}");
    Ok(())
}
