use thiserror::Error;

/// Errors surfaced by the solver/verifier pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("well-preparedness certification failed: {0}")]
    CertificationFailure(String),

    #[error("solution blew up at t = {time}: {detail}")]
    Blowup { time: f64, detail: String },

    #[error("level {level} is outside the occupied range of the field")]
    EmptyLevelSet { level: f64 },

    #[error("degenerate test object: normalization {norm} below threshold")]
    DegenerateTest { norm: f64 },

    #[error("config validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
