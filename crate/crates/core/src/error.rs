//! Error type shared across the crate.
//!
//! Errors split into two families for the CLI exit-code contract:
//! input problems (I/O, JSON, malformed fans) exit with 2, domain
//! problems (non-smooth input where smoothness is required, unsupported
//! descent, incompleteness, non-integral classes) exit with 1.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad fan: {0}")]
    BadFan(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("not smooth: {0}")]
    NotSmooth(String),
    #[error("not complete: {0}")]
    NotComplete(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-integral: {0}")]
    NonIntegral(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    /// CLI exit code: 2 for I/O or parse problems, 1 for domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::BadFan(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
