//! Experiment harness: run configuration, output directories, figures, and
//! measurement reports for the skillmaze laboratory.
//!
//! The binary (`skillmaze`) is a thin wrapper over this library so that the
//! orchestration logic stays testable in-process.

pub mod ablate;
pub mod config;
pub mod diag;
pub mod manifest;
pub mod palette;
pub mod runs;
pub mod svg;

use std::io;

use thiserror::Error;

/// Errors surfaced to the command line as a machine-readable line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] skillmaze_core::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Msg(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Shorthand for a free-form CLI error.
pub fn err(msg: impl Into<String>) -> CliError {
    CliError::Msg(msg.into())
}
