//! Crate-wide error type.
//!
//! Numerical routines return structured errors rather than panicking so the
//! CLI can map configuration problems and numerical failures to distinct
//! exit codes.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A parameter fell outside its documented domain (grid sizes, exponents,
    /// dyadic ranges, hypothesis violations of an estimate, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two fields (or a field and an operator) live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// NaN or infinity encountered where finite data is required.
    #[error("non-finite values: {0}")]
    NonFinite(String),

    /// A field failed a required band-limitation check.
    #[error("field is not band-limited: {0}")]
    BandLimit(String),

    /// A stability restriction on the time step was violated.
    #[error("time step too large: {0}")]
    TimeStep(String),

    /// The pressure fixed-point iteration failed to contract or hit its cap.
    #[error("pressure iteration failed: {0}")]
    Pressure(String),

    /// The outer iteration tripped a divergence guard.
    #[error("iteration aborted: {0}")]
    Aborted(String),

    /// A serialized field or manifest was malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
