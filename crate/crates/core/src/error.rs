//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("integrator diverged at t = {t}: norm excess {excess:.3e}; reduce dt or raise the substep count")]
    Diverged { t: f64, excess: f64 },

    #[error("unsupported photon-number sector: {0}")]
    UnsupportedSector(String),

    #[error("conditional fidelity undefined: {0}")]
    UndefinedConditional(String),

    #[error("size limit: {what} = {value} exceeds bound {bound}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) | Error::InvalidParameter(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
