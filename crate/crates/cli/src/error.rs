use std::path::{Path, PathBuf};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Invalid arguments or configuration values that are not parse errors.
    pub const INVALID: i32 = 1;
    /// Command-line usage error (reported by the argument parser).
    pub const USAGE: i32 = 2;
    /// Malformed CSV or config file.
    pub const PARSE: i32 = 3;
    /// The optimizer produced a non-finite cost or coordinate.
    pub const DIVERGED: i32 = 4;
    /// A file could not be read or written.
    pub const IO: i32 = 5;
    /// Input files disagree on the number of samples.
    pub const ALIGNMENT: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: u64, column: usize, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("row count mismatch: {left} has {left_rows} rows but {right} has {right_rows}")]
    Alignment { left: PathBuf, left_rows: usize, right: PathBuf, right_rows: usize },

    #[error("fit diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{0}")]
    Invalid(String),

    #[error("scale {scale}: {source}")]
    Sweep { scale: f64, source: Box<CliError> },

    #[error(transparent)]
    Core(psne_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse { .. } | CliError::Format { .. } => exit::PARSE,
            CliError::Alignment { .. } => exit::ALIGNMENT,
            CliError::Diverged { .. } => exit::DIVERGED,
            CliError::Invalid(_) | CliError::Core(_) => exit::INVALID,
            CliError::Sweep { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format { path: path.to_path_buf(), message: message.into() }
    }
}

impl From<psne_core::Error> for CliError {
    fn from(e: psne_core::Error) -> Self {
        match e {
            psne_core::Error::Diverged { iteration } => CliError::Diverged { iteration },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
