//! Review coordination for human supervision of terminal agents.
//!
//! An agent submits a typed [`model::Proposal`] and waits on the outcome; a
//! reviewer edits, constrains or approves it through the HTTP API; reasons
//! given along the way are kept in a human-editable preference file.

pub mod api;
pub mod canonical;
pub mod diff;
pub mod endpoints;
pub mod harness;
pub mod ids;
pub mod memory;
pub mod model;
pub mod samples;
pub mod session;
pub mod skills;
