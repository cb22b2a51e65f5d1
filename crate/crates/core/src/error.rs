use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing parameter `{0}`")]
    MissingKey(String),

    #[error("unknown parameter `{0}`")]
    UnknownKey(String),

    #[error("parameters `{0}` and `{1}` set the same quantity")]
    ConflictingKeys(String, String),

    #[error("cannot parse `{key}` = `{value}` as a number")]
    Parse { key: String, value: String },

    #[error("{0}")]
    InvalidValue(String),

    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("{0} out of domain")]
    Domain(&'static str),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("quadrature on [{lo}, {hi}] exceeded {max_subdivisions} subdivisions (error estimate {error:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        max_subdivisions: usize,
        error: f64,
    },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
