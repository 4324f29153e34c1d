use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::watch;
use tokio::time::Instant;

use super::log::SessionLogStore;
use super::{ReviewSession, SessionError, SessionEvent, SessionSummary};
use crate::ids::{self, Millis};
use crate::model::{ArtifactPayload, Decision, Proposal, ProposalKind, ReviewAction, ReviewOutcome};

pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub session_ttl: Duration,
    /// Where session logs live; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub fsync: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { session_ttl: DEFAULT_TTL, data_dir: None, fsync: true }
    }
}

/// What an agent's outcome poll returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PollResult {
    Outcome { outcome: ReviewOutcome },
    RevisionRequested { reasons: Vec<String>, revision: u64 },
    Timeout { revision: u64 },
}

struct Slot {
    session: Mutex<ReviewSession>,
    ordinal: u64,
    /// Bumped after every applied event; long polls wait on it.
    changed: watch::Sender<u64>,
}

impl Slot {
    fn lock(&self) -> MutexGuard<'_, ReviewSession> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Owns all review sessions.
///
/// Mutations of one session are totally ordered by that session's lock and
/// written to its log before they are applied. Long polls hold no lock while
/// waiting.
pub struct Engine {
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    log: Option<SessionLogStore>,
    config: EngineConfig,
    next_ordinal: AtomicU64,
}

impl Engine {
    /// Creates the engine, rebuilding any sessions persisted in `data_dir`.
    pub fn new(config: EngineConfig) -> Result<Self, SessionError> {
        let log = match &config.data_dir {
            Some(dir) => Some(SessionLogStore::open(dir.join("sessions"), config.fsync)?),
            None => None,
        };
        let engine = Engine { sessions: RwLock::new(HashMap::new()), log, config, next_ordinal: AtomicU64::new(0) };
        if let Some(log) = &engine.log {
            let mut restored = log.load_all()?;
            restored.sort_by_key(|s| (s.created_at, s.session_id.clone()));
            for session in restored {
                engine.insert(session);
            }
        }
        Ok(engine)
    }

    pub fn in_memory() -> Self {
        Engine::new(EngineConfig { data_dir: None, ..EngineConfig::default() }).expect("in-memory engine")
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    fn insert(&self, session: ReviewSession) {
        let (changed, _) = watch::channel(0);
        let slot = Slot {
            ordinal: self.next_ordinal.fetch_add(1, Ordering::SeqCst),
            session: Mutex::new(session),
            changed,
        };
        let id = slot.lock().session_id.clone();
        self.sessions.write().unwrap_or_else(|e| e.into_inner()).insert(id, Arc::new(slot));
    }

    fn slot(&self, session_id: &str) -> Result<Arc<Slot>, SessionError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(session_id.to_string()))
    }

    fn commit(&self, slot: &Slot, session: &mut ReviewSession, event: SessionEvent) -> Result<(), SessionError> {
        if let Some(log) = &self.log {
            log.append(&session.session_id, &event)?;
        }
        session.apply(event)?;
        slot.changed.send_modify(|v| *v += 1);
        Ok(())
    }

    pub fn create_session(&self, proposal: Proposal, now: Millis, ttl: Option<Duration>) -> Result<ReviewSession, SessionError> {
        let ttl = ttl.unwrap_or(self.config.session_ttl);
        let deadline = now.saturating_add(ttl.as_millis() as Millis);
        let session = ReviewSession::new(ids::new_id(), proposal, now, deadline);
        if let Some(log) = &self.log {
            log.create(&session)?;
        }
        self.insert(session.clone());
        Ok(session)
    }

    /// Snapshot of a session with no side effects.
    pub fn get(&self, session_id: &str) -> Result<ReviewSession, SessionError> {
        Ok(self.slot(session_id)?.lock().clone())
    }

    /// Marks reviewer attention: pending becomes open.
    pub fn open_session(&self, session_id: &str, now: Millis) -> Result<ReviewSession, SessionError> {
        let slot = self.slot(session_id)?;
        let mut session = slot.lock();
        if let Some(event) = session.plan_open(now)? {
            self.commit(&slot, &mut session, event)?;
        }
        Ok(session.clone())
    }

    /// Applies a reviewer action. The server assigns the action id and
    /// timestamp.
    pub fn submit_action(
        &self,
        session_id: &str,
        mut action: ReviewAction,
        now: Millis,
    ) -> Result<(u64, ReviewSession), SessionError> {
        action.action_id = ids::new_id();
        action.timestamp = now;
        let slot = self.slot(session_id)?;
        let mut session = slot.lock();
        let event = session.plan_action(action, now)?;
        let seq = event.sequence_number;
        self.commit(&slot, &mut session, event)?;
        Ok((seq, session.clone()))
    }

    pub fn agent_update_artifact(
        &self,
        session_id: &str,
        artifact: ArtifactPayload,
        base_revision: u64,
        now: Millis,
    ) -> Result<ReviewSession, SessionError> {
        let slot = self.slot(session_id)?;
        let mut session = slot.lock();
        let event = session.plan_agent_update(artifact, base_revision, now)?;
        self.commit(&slot, &mut session, event)?;
        Ok(session.clone())
    }

    pub fn resolve_session(&self, session_id: &str, decision: Decision, now: Millis) -> Result<ReviewOutcome, SessionError> {
        let slot = self.slot(session_id)?;
        let mut session = slot.lock();
        let event = session.plan_resolve(decision, now)?;
        self.commit(&slot, &mut session, event)?;
        Ok(session.outcome.clone().expect("resolved session has an outcome"))
    }

    /// Expires every live session whose deadline is strictly before `now`.
    pub fn expire_stale(&self, now: Millis) -> Vec<String> {
        let slots: Vec<Arc<Slot>> = self.sessions.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
        let mut expired = Vec::new();
        for slot in slots {
            let mut session = slot.lock();
            if let Some(event) = session.plan_expire(now) {
                match self.commit(&slot, &mut session, event) {
                    Ok(()) => expired.push(session.session_id.clone()),
                    Err(e) => tracing::warn!(session = %session.session_id, error = %e, "expiry failed"),
                }
            }
        }
        expired.sort();
        expired
    }

    pub fn events_since(&self, session_id: &str, after_sequence: u64) -> Result<Vec<SessionEvent>, SessionError> {
        Ok(self.slot(session_id)?.lock().events_since(after_sequence))
    }

    /// Session summaries, most recently updated first.
    pub fn list(&self, kind: Option<ProposalKind>) -> Vec<SessionSummary> {
        let slots: Vec<Arc<Slot>> = self.sessions.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
        let mut rows: Vec<(SessionSummary, u64)> = slots
            .iter()
            .map(|slot| (slot.lock().summary(), slot.ordinal))
            .filter(|(s, _)| kind.is_none_or(|k| s.kind == k))
            .collect();
        rows.sort_by(|(a, ao), (b, bo)| b.updated_at.cmp(&a.updated_at).then(bo.cmp(ao)));
        rows.into_iter().map(|(s, _)| s).collect()
    }

    /// Waits for a terminal outcome or a rewrite request, up to `max_wait`.
    pub async fn await_outcome(&self, session_id: &str, max_wait: Duration) -> Result<PollResult, SessionError> {
        let slot = self.slot(session_id)?;
        let mut rx = slot.changed.subscribe();
        let deadline = Instant::now() + max_wait;
        loop {
            let revision = {
                let session = slot.lock();
                if let Some(outcome) = &session.outcome {
                    return Ok(PollResult::Outcome { outcome: outcome.clone() });
                }
                if !session.pending_rewrites.is_empty() {
                    return Ok(PollResult::RevisionRequested {
                        reasons: session.pending_rewrites.clone(),
                        revision: session.revision,
                    });
                }
                session.revision
            };
            match tokio::time::timeout_at(deadline, rx.changed()).await {
                Ok(Ok(())) => continue,
                _ => return Ok(PollResult::Timeout { revision }),
            }
        }
    }

    /// Waits until at least one event after `after_sequence` exists, up to
    /// `max_wait`. Returns an empty list on timeout.
    pub async fn wait_events(
        &self,
        session_id: &str,
        after_sequence: u64,
        max_wait: Duration,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        let slot = self.slot(session_id)?;
        let mut rx = slot.changed.subscribe();
        let deadline = Instant::now() + max_wait;
        loop {
            let events = slot.lock().events_since(after_sequence);
            if !events.is_empty() {
                return Ok(events);
            }
            match tokio::time::timeout_at(deadline, rx.changed()).await {
                Ok(Ok(())) => continue,
                _ => return Ok(Vec::new()),
            }
        }
    }
}
