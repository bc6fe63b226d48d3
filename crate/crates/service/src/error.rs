use std::path::PathBuf;

use messplus_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("corrupt event log {path}: {msg}")]
    CorruptLog { path: PathBuf, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("unknown tenant {0}")]
    UnknownTenant(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("tenant {0} runs in trace mode; route calls must carry labels")]
    LabelsRequired(String),

    /// The tenant stopped accepting writes after a failed log append.
    #[error("tenant {0} is unavailable until restart")]
    Unavailable(String),
}
