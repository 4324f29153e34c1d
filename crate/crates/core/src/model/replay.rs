//! Event-sourced reconstruction of an artifact.

use super::action::ReviewAction;
use super::artifact::ArtifactPayload;
use super::reduce::{reduce, ReduceError};

/// One step of an artifact's history.
#[derive(Debug, Clone, Copy)]
pub enum ReplayStep<'a> {
    Action(&'a ReviewAction),
    /// Full replacement of the artifact by the agent.
    AgentUpdate(&'a ArtifactPayload),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event {sequence}: {source}")]
    Reduce { sequence: u64, source: ReduceError },
    #[error("event {sequence}: agent update changes artifact kind from {from} to {to}")]
    KindChange { sequence: u64, from: super::ProposalKind, to: super::ProposalKind },
}

/// Folds `reduce` over actions and substitution over agent updates.
pub fn replay<'a, I>(initial: &ArtifactPayload, events: I) -> Result<ArtifactPayload, ReplayError>
where
    I: IntoIterator<Item = (u64, ReplayStep<'a>)>,
{
    let mut current = initial.clone();
    for (sequence, step) in events {
        current = match step {
            ReplayStep::Action(action) => {
                reduce(&current, action).map_err(|source| ReplayError::Reduce { sequence, source })?
            }
            ReplayStep::AgentUpdate(artifact) => {
                if artifact.kind() != current.kind() {
                    return Err(ReplayError::KindChange { sequence, from: current.kind(), to: artifact.kind() });
                }
                artifact.clone()
            }
        };
    }
    Ok(current)
}
