//! File formats and command-line front end for `entcov-core`.

pub mod cli;
pub mod io;
pub mod report;
pub mod spec;

pub use cli::run;

/// Errors surfaced by the front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] entcov_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
