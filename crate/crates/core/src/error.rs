use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid marginal key: {0}")]
    InvalidKey(String),

    #[error("divergence is infinite: q vanishes where p has mass")]
    InfiniteDivergence,

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("({0}, {1}) is not an edge of the tree")]
    InvalidEdge(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// A model invariant is violated; `path` is a JSON pointer into the model file layout.
    #[error("invalid model at {path}: {reason}")]
    InvalidModel { path: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("minimizing edge is not unique (gap {0:e})")]
    UniquenessViolated(f64),

    /// The requested operation has nothing to do on this input.
    #[error("no-op: {0}")]
    NoOp(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

impl Error {
    pub(crate) fn model(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidModel {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
