//! Content-addressed version store for scripts.
//!
//! Script content is kept as blobs and each save appends a commit that
//! points at its blob and at the previous head. Objects are keyed by the
//! SHA-256 of their stored bytes, so they can be verified at any time.

mod backend;
mod ids;
mod object;
mod store;

use alloc::string::String;

use thiserror::Error;

pub use backend::{Backend, MemoryBackend};
pub use ids::{ObjectId, ScriptId};
pub use object::{
    blob_bytes, blob_hash, escape_message, is_rfc3339_utc, parse_blob, unescape_message, Commit,
    CommitFields,
};
pub use store::{Finding, FindingKind, HistoryEntry, Store};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcsError {
    #[error("commit message must not be empty")]
    EmptyMessage,
    #[error("author must not be empty")]
    EmptyAuthor,
    #[error("{0}")]
    InvalidField(&'static str),
    #[error("timestamp `{0}` is not an RFC 3339 UTC time")]
    InvalidTimestamp(String),
    #[error("invalid script id `{0}`")]
    InvalidScriptId(String),
    #[error("invalid object hash `{0}`")]
    InvalidHash(String),
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("commit {0} belongs to another script")]
    ForeignCommit(String),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
    #[error("storage error: {0}")]
    Backend(String),
}
