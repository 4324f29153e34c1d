//! Artifact and action types plus the pure functions over them.

mod action;
mod artifact;
mod reduce;
mod replay;
mod validate;

pub use action::*;
pub use artifact::*;
pub use reduce::{reduce, ReduceError};
pub use replay::{replay, ReplayError, ReplayStep};
pub use validate::{
    check_artifact, decode_artifact, normalize_artifact, validate_proposal, ValidationError, ValidationErrors,
    MAX_TITLE_CHARS,
};
