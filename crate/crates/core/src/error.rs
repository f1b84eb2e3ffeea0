use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    #[error("insufficient support: need {needed} points with positive weight, got {got}")]
    InsufficientSupport { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("label count {labels} does not match point count {points}")]
    LabelMismatch { labels: usize, points: usize },

    #[error("ground-truth inlier labels are required")]
    MissingGroundTruth,

    #[error("scene generation failed after {0} attempts")]
    RetryExhausted(usize),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
