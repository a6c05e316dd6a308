//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by synthesis, analysis, extraction, and parsing.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The network matrix could not be inverted at the given frequency.
    #[error("singular network matrix at {freq:.9e} {unit}")]
    Singular { freq: f64, unit: &'static str },

    /// Text input failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A matrix document violated the symmetry requirement.
    #[error("asymmetric matrix: entry ({i},{j}) = {a} but ({j},{i}) = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    /// Iterative refinement stopped above the requested residual.
    #[error("no convergence: residual {residual:.3e} above threshold {threshold:.3e}")]
    NoConvergence { residual: f64, threshold: f64 },

    /// The requested coupling topology cannot carry the response.
    #[error("infeasible topology: {0}")]
    Infeasible(String),

    /// A parameter-extraction procedure could not produce a value.
    #[error("extraction failed: {0}")]
    Extraction(String),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
