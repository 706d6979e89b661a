//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by tensors, environments, training loops, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    #[error("shape mismatch in {op}: {details}")]
    Shape { op: &'static str, details: String },

    /// A NaN or infinity showed up where only finite values are valid.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Input is structurally valid but degenerate for the operation
    /// (zero-norm rows, all-same-skill batches, empty reference sets, ...).
    #[error("degenerate input in {op}: {details}")]
    Degenerate { op: &'static str, details: String },

    /// A configuration value violates its documented range.
    #[error("invalid config: {0}")]
    Config(String),

    /// A maze layout file or structure is malformed.
    #[error("invalid layout: {0}")]
    Layout(String),

    /// The replay buffer cannot serve the requested sample.
    #[error("replay buffer: {0}")]
    Buffer(String),

    /// Malformed serialized data (CSV rows, checkpoint records, ...).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
