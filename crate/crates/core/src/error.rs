use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or numerically rank deficient (sigma_min/sigma_max = {ratio:e})")]
    SingularMatrix { ratio: f64 },

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("network is disconnected")]
    Disconnected,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("initial error is zero, relative error is undefined")]
    DegenerateInitial,

    #[error("bound violated at step {step}: observed {observed:e} > bound {bound:e}")]
    BoundViolated {
        step: usize,
        observed: f64,
        bound: f64,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI: 1 for bad input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_)
            | Error::SingularMatrix { .. }
            | Error::IndexOutOfRange { .. }
            | Error::InvalidParams(_)
            | Error::Disconnected
            | Error::TooLarge(_)
            | Error::DegenerateInitial
            | Error::EmptyInput
            | Error::Parse(_)
            | Error::Json(_) => 1,
            Error::GenerationFailed(_)
            | Error::BoundViolated { .. }
            | Error::Io(_)
            | Error::Csv(_) => 2,
        }
    }
}
