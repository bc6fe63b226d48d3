use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty model zoo")]
    EmptyZoo,

    /// Exploration needs a satisfaction bit for every model.
    #[error("missing satisfaction label for model {model} at request {t}")]
    MissingLabel { t: u64, model: usize },

    #[error("request index {got} does not match router position {expected}")]
    OutOfSequence { expected: u64, got: u64 },

    #[error("feedback for decision {got} is out of order; oldest pending is {oldest}")]
    FeedbackOutOfOrder { got: u64, oldest: u64 },

    #[error("feedback for decision {0} was already applied")]
    DuplicateFeedback(u64),

    #[error("no pending decision {0}")]
    UnknownDecision(u64),

    #[error("decision {0} explored; feedback must label every model")]
    LabelsRequired(u64),

    #[error("Alpha too high: target {alpha} exceeds best accuracy {max}")]
    Infeasible { alpha: f64, max: f64 },

    #[error("trace error at line {line}: {msg}")]
    Trace { line: usize, msg: String },

    #[error("trace does not match zoo: {0}")]
    TraceMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
