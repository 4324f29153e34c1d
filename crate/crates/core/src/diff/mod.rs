//! Unified diff parsing, rendering and hunk-level application.
//!
//! Hunks are the unit of code approval. Diffs are taken as the agent sent
//! them; this module never recomputes a diff from file contents.

mod apply;
mod parse;

pub use apply::{apply_hunks, materialize_decisions, ApplyError, MaterializeError, Partition};
pub use parse::{parse_unified_diff, render_unified_diff, DiffError};

use serde::{Deserialize, Serialize};

use crate::model::FileChange;

/// A set of file changes, hunks per file ordered by `old_start`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub files: Vec<FileChange>,
}

impl ChangeSet {
    pub fn hunk_count(&self) -> usize {
        self.files.iter().map(|f| f.hunks.len()).sum()
    }
}

/// Splits text into lines, each keeping its `\n` terminator. The last line
/// lacks one when the text does not end with a newline.
pub(crate) fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}
