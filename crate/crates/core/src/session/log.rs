//! Line-delimited, append-only session logs.
//!
//! One file per session at `<dir>/<session_id>.log`. The first line is the
//! header (proposal, timestamps, deadline); each following line is one
//! canonically encoded [`SessionEvent`].

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ReviewSession, SessionEvent};
use crate::canonical;
use crate::ids::Millis;
use crate::model::Proposal;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "session")]
pub struct LogHeader {
    pub session_id: String,
    pub proposal: Proposal,
    pub created_at: Millis,
    pub deadline: Millis,
}

#[derive(Debug, Clone)]
pub struct SessionLogStore {
    dir: PathBuf,
    fsync: bool,
}

impl SessionLogStore {
    pub fn open(dir: impl Into<PathBuf>, fsync: bool) -> Result<Self, LogError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LogError::Io { path: dir.clone(), source })?;
        Ok(SessionLogStore { dir, fsync })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.log"))
    }

    pub fn create(&self, session: &ReviewSession) -> Result<(), LogError> {
        let header = LogHeader {
            session_id: session.session_id.clone(),
            proposal: session.proposal.clone(),
            created_at: session.created_at,
            deadline: session.deadline,
        };
        let path = self.path_for(&session.session_id);
        let io_err = |source| LogError::Io { path: path.clone(), source };
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(io_err)?;
        self.write_line(&mut file, &header).map_err(io_err)
    }

    pub fn append(&self, session_id: &str, event: &SessionEvent) -> Result<(), LogError> {
        let path = self.path_for(session_id);
        let io_err = |source| LogError::Io { path: path.clone(), source };
        let mut file = OpenOptions::new().append(true).open(&path).map_err(io_err)?;
        self.write_line(&mut file, event).map_err(io_err)
    }

    fn write_line<T: Serialize>(&self, file: &mut File, value: &T) -> io::Result<()> {
        let mut line = canonical::encode(value).map_err(io::Error::other)?;
        line.push(b'\n');
        // a single write keeps a record from interleaving with others
        file.write_all(&line)?;
        if self.fsync {
            file.sync_data()?;
        }
        Ok(())
    }

    /// Rebuilds one session by replaying its log. A torn final line (no
    /// trailing newline) from an interrupted write is discarded.
    pub fn load(&self, path: &Path) -> Result<ReviewSession, LogError> {
        let bytes = fs::read(path).map_err(|source| LogError::Io { path: path.to_path_buf(), source })?;
        let mut records: Vec<&[u8]> = bytes.split_inclusive(|&b| b == b'\n').collect();
        if records.last().is_some_and(|l| !l.ends_with(b"\n")) {
            records.pop();
        }
        let Some(first) = records.first() else {
            return Err(LogError::Corrupt { line: 1, message: "missing header".into() });
        };
        let header: LogHeader =
            canonical::decode(first).map_err(|e| LogError::Corrupt { line: 1, message: e.to_string() })?;
        let mut session = ReviewSession::new(header.session_id, header.proposal, header.created_at, header.deadline);
        for (i, record) in records.iter().enumerate().skip(1) {
            let event: SessionEvent =
                canonical::decode(record).map_err(|e| LogError::Corrupt { line: i + 1, message: e.to_string() })?;
            session.apply(event).map_err(|e| LogError::Corrupt { line: i + 1, message: e.to_string() })?;
        }
        Ok(session)
    }

    /// Every session found in the directory.
    pub fn load_all(&self) -> Result<Vec<ReviewSession>, LogError> {
        let entries = fs::read_dir(&self.dir).map_err(|source| LogError::Io { path: self.dir.clone(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "log"))
            .collect();
        paths.sort();
        paths.iter().map(|p| self.load(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionOp, ReviewAction};
    use crate::samples;

    #[test]
    fn write_then_load_reproduces_session() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionLogStore::open(dir.path(), false).unwrap();
        let mut s = ReviewSession::new("abc".into(), samples::proposal("t", samples::formal_email()), 5, 500);
        store.create(&s).unwrap();
        let ev = s
            .plan_action(ReviewAction::new(ActionOp::DeleteParagraph { paragraph_id: "p3".into() }), 6)
            .unwrap();
        store.append("abc", &ev).unwrap();
        s.apply(ev).unwrap();
        let loaded = store.load(&store.path_for("abc")).unwrap();
        assert_eq!(loaded, s);
    }

    #[test]
    fn torn_tail_is_ignored_but_mid_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionLogStore::open(dir.path(), false).unwrap();
        let s = ReviewSession::new("abc".into(), samples::proposal("t", samples::deploy_approval()), 5, 500);
        store.create(&s).unwrap();
        let path = store.path_for("abc");
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"sequence_num").unwrap();
        assert_eq!(store.load(&path).unwrap(), s);
        f.write_all(b"\n{}\n").unwrap();
        assert!(matches!(store.load(&path), Err(LogError::Corrupt { line: 2, .. })));
    }
}
