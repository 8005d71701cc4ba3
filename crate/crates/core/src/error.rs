use thiserror::Error;

/// Errors raised by the toolkit. Variants map onto CLI exit codes via
/// [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("invalid IFS: {0}")]
    InvalidIfs(String),

    #[error("map {index} is not projectable: {reason}")]
    NotProjectable { index: usize, reason: String },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("tuple is strongly conformal; Furstenberg directions are undefined")]
    NoFurstenbergDirections,

    #[error("no convergence after {steps} steps: {detail}")]
    NonConvergence { steps: usize, detail: String },

    #[error("resource limit exceeded at level {level}: {detail}")]
    ResourceLimit { level: u32, detail: String },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("insufficient mass: N_{level} = {measured} < required {required:.3}")]
    InsufficientMass { level: u32, measured: usize, required: f64 },

    #[error("stage `{stage}` failed: {detail}")]
    Stage { stage: String, detail: String },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("no reference value available: {0}")]
    NoReference(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceLimit { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn stage(stage: &str, err: Error) -> Self {
        match err {
            Error::Stage { .. } => err,
            other => Error::Stage {
                stage: stage.to_string(),
                detail: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
