//! Review sessions: state machine, event log, outcome signalling, expiry.
//!
//! Every mutation is expressed as a [`SessionEvent`] that is first checked
//! against the session, then persisted, then applied with
//! [`ReviewSession::apply`]. Recovery from disk goes through the same
//! `apply`, so a rebuilt session is identical to the live one.

mod engine;
mod log;

pub use engine::{Engine, EngineConfig, PollResult, DEFAULT_TTL};
pub use log::{LogError, LogHeader, SessionLogStore};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::Millis;
use crate::model::{
    replay, ActionOp, ArtifactPayload, Decision, LoggedAction, Proposal, ProposalKind, ReduceError, ReplayError,
    ReplayStep, ReviewAction, ReviewOutcome, ValidationErrors,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Pending,
    Open,
    Resolved,
    Expired,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::Resolved | SessionState::Expired)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Pending => "pending",
            SessionState::Open => "open",
            SessionState::Resolved => "resolved",
            SessionState::Expired => "expired",
        }
    }

    /// The legal transition table.
    pub fn can_transition(self, to: SessionState) -> bool {
        use SessionState::*;
        matches!((self, to), (Pending, Open) | (Pending, Expired) | (Pending, Resolved) | (Open, Resolved) | (Open, Expired))
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub sequence_number: u64,
    pub timestamp: Millis,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventBody {
    Action {
        action: ReviewAction,
    },
    AgentUpdate {
        artifact: ArtifactPayload,
        base_revision: u64,
    },
    StateChange {
        from: SessionState,
        to: SessionState,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision: Option<Decision>,
    },
}

impl EventBody {
    pub fn is_mutating(&self) -> bool {
        !matches!(self, EventBody::StateChange { .. })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session already {0}")]
    Terminal(SessionState),
    #[error("{0}")]
    Reduce(#[from] ReduceError),
    #[error("artifact kind {got} does not match session kind {expected}")]
    KindMismatch { expected: ProposalKind, got: ProposalKind },
    #[error("{0}")]
    InvalidArtifact(ValidationErrors),
    #[error("stale base revision {base_revision}, current revision is {}", .conflict.current_revision)]
    Conflict { base_revision: u64, conflict: Box<Conflict> },
    #[error("decision must be approved or rejected")]
    BadDecision,
    #[error("storage: {0}")]
    Storage(#[from] LogError),
    #[error("replay diverged: {0}")]
    Replay(#[from] ReplayError),
}

/// What an agent needs to catch up after a stale update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub current_revision: u64,
    pub missed_events: Vec<SessionEvent>,
}

/// One review session. Serialized as-is for `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub session_id: String,
    pub kind: ProposalKind,
    pub proposal: Proposal,
    pub state: SessionState,
    pub current_artifact: ArtifactPayload,
    pub revision: u64,
    pub event_log: Vec<SessionEvent>,
    pub outcome: Option<ReviewOutcome>,
    /// Rewrite reasons not yet answered by an agent update.
    pub pending_rewrites: Vec<String>,
    pub created_at: Millis,
    pub updated_at: Millis,
    pub deadline: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub kind: ProposalKind,
    pub title: String,
    pub state: SessionState,
    pub revision: u64,
    pub created_at: Millis,
    pub updated_at: Millis,
}

impl ReviewSession {
    /// A fresh pending session. The proposal's client timestamp is replaced
    /// with the server's.
    pub fn new(session_id: String, mut proposal: Proposal, now: Millis, deadline: Millis) -> Self {
        proposal.created_at = now;
        ReviewSession {
            session_id,
            kind: proposal.kind,
            current_artifact: proposal.payload.clone(),
            proposal,
            state: SessionState::Pending,
            revision: 0,
            event_log: Vec::new(),
            outcome: None,
            pending_rewrites: Vec::new(),
            created_at: now,
            updated_at: now,
            deadline,
        }
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            kind: self.kind,
            title: self.proposal.title.clone(),
            state: self.state,
            revision: self.revision,
            created_at: self.created_at,
            updated_at: self.updated_at,
        }
    }

    fn next_sequence(&self) -> u64 {
        self.event_log.len() as u64 + 1
    }

    fn event(&self, now: Millis, body: EventBody) -> SessionEvent {
        SessionEvent { sequence_number: self.next_sequence(), timestamp: now, body }
    }

    fn ensure_live(&self) -> Result<(), SessionError> {
        if self.state.is_terminal() {
            Err(SessionError::Terminal(self.state))
        } else {
            Ok(())
        }
    }

    /// The event marking reviewer attention, or `None` if already open.
    pub fn plan_open(&self, now: Millis) -> Result<Option<SessionEvent>, SessionError> {
        self.ensure_live()?;
        Ok(match self.state {
            SessionState::Pending => Some(self.event(
                now,
                EventBody::StateChange { from: SessionState::Pending, to: SessionState::Open, decision: None },
            )),
            _ => None,
        })
    }

    pub fn plan_action(&self, action: ReviewAction, now: Millis) -> Result<SessionEvent, SessionError> {
        self.ensure_live()?;
        crate::model::reduce(&self.current_artifact, &action)?;
        Ok(self.event(now, EventBody::Action { action }))
    }

    pub fn plan_agent_update(
        &self,
        mut artifact: ArtifactPayload,
        base_revision: u64,
        now: Millis,
    ) -> Result<SessionEvent, SessionError> {
        self.ensure_live()?;
        if artifact.kind() != self.kind {
            return Err(SessionError::KindMismatch { expected: self.kind, got: artifact.kind() });
        }
        crate::model::normalize_artifact(&mut artifact)
            .map_err(|errors| SessionError::InvalidArtifact(ValidationErrors { errors }))?;
        if base_revision != self.revision {
            return Err(SessionError::Conflict {
                base_revision,
                conflict: Box::new(Conflict {
                    current_revision: self.revision,
                    missed_events: self.events_after_revision(base_revision),
                }),
            });
        }
        Ok(self.event(now, EventBody::AgentUpdate { artifact, base_revision }))
    }

    pub fn plan_resolve(&self, decision: Decision, now: Millis) -> Result<SessionEvent, SessionError> {
        self.ensure_live()?;
        if decision == Decision::Expired {
            return Err(SessionError::BadDecision);
        }
        Ok(self.event(
            now,
            EventBody::StateChange { from: self.state, to: SessionState::Resolved, decision: Some(decision) },
        ))
    }

    /// The expiry event, if this session is live and past its deadline.
    pub fn plan_expire(&self, now: Millis) -> Option<SessionEvent> {
        (!self.state.is_terminal() && now > self.deadline).then(|| {
            self.event(
                now,
                EventBody::StateChange { from: self.state, to: SessionState::Expired, decision: Some(Decision::Expired) },
            )
        })
    }

    /// Applies a checked event. Used for live mutations and for recovery.
    pub fn apply(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        if event.sequence_number != self.next_sequence() {
            return Err(SessionError::Storage(LogError::Corrupt {
                line: event.sequence_number as usize + 1,
                message: format!("expected sequence {}", self.next_sequence()),
            }));
        }
        match &event.body {
            EventBody::Action { action } => {
                let next = crate::model::reduce(&self.current_artifact, action)?;
                self.current_artifact = next;
                self.revision += 1;
                if let ActionOp::RewriteRequest { reason, .. } = &action.op {
                    self.pending_rewrites.push(reason.clone());
                }
            }
            EventBody::AgentUpdate { artifact, .. } => {
                if artifact.kind() != self.kind {
                    return Err(SessionError::KindMismatch { expected: self.kind, got: artifact.kind() });
                }
                self.current_artifact = artifact.clone();
                self.revision += 1;
                self.pending_rewrites.clear();
            }
            EventBody::StateChange { from, to, decision } => {
                if *from != self.state || !self.state.can_transition(*to) {
                    return Err(SessionError::Terminal(self.state));
                }
                self.state = *to;
                if to.is_terminal() {
                    let decision = decision.unwrap_or(Decision::Expired);
                    self.outcome = Some(self.build_outcome(decision));
                }
            }
        }
        self.updated_at = self.updated_at.max(event.timestamp);
        self.event_log.push(event);
        Ok(())
    }

    fn build_outcome(&self, decision: Decision) -> ReviewOutcome {
        let action_log: Vec<LoggedAction> = self
            .event_log
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::Action { action } => {
                    Some(LoggedAction { sequence_number: e.sequence_number, action: action.clone() })
                }
                _ => None,
            })
            .collect();
        let rewrite_reasons = action_log
            .iter()
            .filter_map(|l| match &l.action.op {
                ActionOp::RewriteRequest { reason, .. } => Some(reason.clone()),
                _ => None,
            })
            .collect();
        ReviewOutcome {
            session_id: self.session_id.clone(),
            decision,
            final_artifact: self.current_artifact.clone(),
            action_log,
            rewrite_reasons,
            revision: self.revision,
        }
    }

    /// Events after the `revision`-th mutating event.
    pub fn events_after_revision(&self, revision: u64) -> Vec<SessionEvent> {
        let mut seen = 0u64;
        let mut start = 0usize;
        if revision > 0 {
            for (i, e) in self.event_log.iter().enumerate() {
                if e.body.is_mutating() {
                    seen += 1;
                    if seen == revision {
                        start = i + 1;
                        break;
                    }
                }
            }
        }
        self.event_log[start..].to_vec()
    }

    pub fn events_since(&self, after_sequence: u64) -> Vec<SessionEvent> {
        let start = (after_sequence as usize).min(self.event_log.len());
        self.event_log[start..].to_vec()
    }

    /// Recomputes the artifact from the proposal and the log.
    pub fn replay(&self) -> Result<ArtifactPayload, ReplayError> {
        replay(
            &self.proposal.payload,
            self.event_log.iter().filter_map(|e| match &e.body {
                EventBody::Action { action } => Some((e.sequence_number, ReplayStep::Action(action))),
                EventBody::AgentUpdate { artifact, .. } => Some((e.sequence_number, ReplayStep::AgentUpdate(artifact))),
                EventBody::StateChange { .. } => None,
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReviewAction;
    use crate::samples;

    fn session(payload: ArtifactPayload) -> ReviewSession {
        ReviewSession::new("s".into(), samples::proposal("t", payload), 1_000, 2_000)
    }

    fn run(s: &mut ReviewSession, e: Result<SessionEvent, SessionError>) {
        s.apply(e.unwrap()).unwrap();
    }

    #[test]
    fn actions_bump_revision_and_log() {
        let mut s = session(samples::resnet_plan());
        let a = ReviewAction::new(samples::sample_action(ProposalKind::Plan));
        let ev = s.plan_action(a, 1_001);
        run(&mut s, ev);
        assert_eq!(s.revision, 1);
        assert_eq!(s.event_log[0].sequence_number, 1);
        assert_eq!(s.replay().unwrap(), s.current_artifact);
    }

    #[test]
    fn rewrite_pending_until_agent_update() {
        let mut s = session(samples::formal_email());
        let a = ReviewAction::new(samples::sample_action(ProposalKind::Email));
        let ev = s.plan_action(a, 1_001);
        run(&mut s, ev);
        assert_eq!(s.pending_rewrites, vec![samples::EMOJI_REASON.to_string()]);
        let ev = s.plan_agent_update(samples::casual_email(), 1, 1_002);
        run(&mut s, ev);
        assert!(s.pending_rewrites.is_empty());
        assert_eq!(s.current_artifact, samples::casual_email());
    }

    #[test]
    fn stale_update_conflicts_with_missed_events() {
        let mut s = session(samples::formal_email());
        let edit = ReviewAction::new(ActionOp::EditParagraph { paragraph_id: "p1".into(), new_text: "Hi,".into() });
        let ev = s.plan_action(edit, 1_001);
        run(&mut s, ev);
        match s.plan_agent_update(samples::casual_email(), 0, 1_002) {
            Err(SessionError::Conflict { conflict, .. }) => {
                assert_eq!(conflict.current_revision, 1);
                assert_eq!(conflict.missed_events.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            s.plan_agent_update(samples::resnet_plan(), 1, 1_003),
            Err(SessionError::KindMismatch { .. })
        ));
    }

    #[test]
    fn expiry_is_strictly_after_deadline() {
        let s = session(samples::deploy_approval());
        assert!(s.plan_expire(2_000).is_none());
        assert!(s.plan_expire(2_001).is_some());
    }

    #[test]
    fn revision_counting_after_revision_lookup() {
        let mut s = session(samples::resnet_plan());
        let ev = s.plan_open(1_000);
        run(&mut s, ev.map(|e| e.unwrap()));
        for c in ["a", "b", "c"] {
            let a = ReviewAction::new(ActionOp::AddConstraint { step_id: "execution".into(), constraint: c.into() });
            let ev = s.plan_action(a, 1_001);
            run(&mut s, ev);
        }
        // open event + three actions; revision 1 leaves the last two
        assert_eq!(s.events_after_revision(1).len(), 2);
        assert_eq!(s.events_after_revision(0).len(), 4);
        assert_eq!(s.events_since(1).len(), 3);
        assert!(s.events_since(10).is_empty());
    }
}
