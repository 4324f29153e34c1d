//! Compacting preference memory: record a few corrections, let the agent
//! draft a summary, have the reviewer edit it and unload a stale entry, then
//! commit the approved result back to the file.

use agentclick::memory::{begin_compaction, EntryDraft, MemoryFile};
use agentclick::model::{ActionOp, Decision, ProposalKind, ReviewAction};
use agentclick::samples;
use agentclick::session::Engine;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let file = MemoryFile::new(dir.path().join("MEMORY.md"));
    let now = agentclick::ids::now_ms();

    let drafts = [
        (ProposalKind::Email, samples::EMOJI_REASON),
        (ProposalKind::Plan, samples::CHECKPOINT_CONSTRAINT),
        (ProposalKind::Code, "prefer os.path over pathlib"),
    ];
    let ids = file.record_all(
        drafts.iter().map(|(kind, reason)| EntryDraft { kind: *kind, reason: reason.to_string(), before: None, after: None }).collect(),
        now,
    )?;

    let store = file.load()?;
    let proposal = begin_compaction(
        "Casual emails with emoji. Checkpoint training every 10 epochs. Use os.path.",
        store.entries().cloned().collect(),
        "example-agent",
    )?;

    let engine = Engine::in_memory();
    let id = engine.create_session(proposal, now, None)?.session_id;
    for op in [
        ActionOp::UnloadEntry { entry_id: ids[2].clone() },
        ActionOp::EditSummary { new_text: "Casual emails with emoji. Checkpoint training every 10 epochs.".into() },
    ] {
        engine.submit_action(&id, ReviewAction::new(op), now)?;
    }
    let outcome = engine.resolve_session(&id, Decision::Approved, now)?;

    println!("committed: {}", file.commit_compaction(&outcome, now)?);
    println!("committed again: {}", file.commit_compaction(&outcome, now)?);
    let store = file.load()?;
    for e in store.entries() {
        println!("[{}] {:<10} {}", if e.loaded { "x" } else { " " }, e.kind.as_str(), e.reason);
    }
    for s in store.summaries() {
        println!("summary {}: {}", s.summary_id, s.text);
    }
    Ok(())
}
