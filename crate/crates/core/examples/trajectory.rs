//! Reviewing an execution trajectory: attach guidance to the failed step,
//! reject, and turn the guidance into preference drafts.

use agentclick::memory::preference_drafts;
use agentclick::model::{ActionOp, ArtifactPayload, Decision, ReviewAction, TrajStatus};
use agentclick::samples;
use agentclick::session::Engine;

fn main() -> anyhow::Result<()> {
    let engine = Engine::in_memory();
    let now = agentclick::ids::now_ms();
    let session = engine.create_session(samples::proposal("CIFAR-10 training run", samples::flaky_trajectory()), now, None)?;

    let ArtifactPayload::Trajectory(run) = &session.current_artifact else { unreachable!() };
    let failed = run.steps.iter().find(|s| s.status == TrajStatus::Failed).expect("sample has a failure");
    println!("failed step {}: {}", failed.step_id, failed.detail);

    let guidance = ActionOp::AnnotateStep {
        step_id: failed.step_id.clone(),
        guidance: "start from batch_size=128 on this GPU instead of probing upward".into(),
    };
    engine.submit_action(&session.session_id, ReviewAction::new(guidance), now)?;
    let outcome = engine.resolve_session(&session.session_id, Decision::Rejected, now)?;

    let ArtifactPayload::Trajectory(run) = &outcome.final_artifact else { unreachable!() };
    for step in &run.steps {
        println!("{} {:?} {:?} {}", step.step_id, step.step_type, step.status, step.detail);
        for a in &step.annotations {
            println!("    guidance: {a}");
        }
    }
    for d in preference_drafts(&engine.get(&session.session_id)?) {
        println!("would remember: {} (before: {:?})", d.reason, d.before);
    }
    Ok(())
}
