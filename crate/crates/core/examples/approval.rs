//! A plain choice: the reviewer picks one option and approves.

use agentclick::model::{ActionOp, ArtifactPayload, Decision, ReviewAction};
use agentclick::samples;
use agentclick::session::{Engine, SessionError};

fn main() -> anyhow::Result<()> {
    let engine = Engine::in_memory();
    let now = agentclick::ids::now_ms();
    let id = engine.create_session(samples::proposal("Deploy?", samples::deploy_approval()), now, None)?.session_id;

    let bogus = ReviewAction::new(ActionOp::SelectOption { option_id: "everywhere".into() });
    match engine.submit_action(&id, bogus, now) {
        Err(SessionError::Reduce(e)) => println!("refused: {e}"),
        other => anyhow::bail!("expected a refusal, got {other:?}"),
    }
    let edit = ReviewAction::new(ActionOp::EditStep { step_id: "x".into(), new_description: "y".into() });
    println!("refused: {}", engine.submit_action(&id, edit, now).unwrap_err());

    engine.submit_action(&id, ReviewAction::new(ActionOp::SelectOption { option_id: "staging".into() }), now)?;
    let outcome = engine.resolve_session(&id, Decision::Approved, now)?;
    let ArtifactPayload::Approval(choice) = outcome.final_artifact else { unreachable!() };
    println!("{} -> {:?} ({:?})", choice.prompt, choice.selected, outcome.decision);
    Ok(())
}
