//! Front-end errors: library errors with file context, usage errors and learner rejection.

use std::path::{Path, PathBuf};

use thiserror::Error;
use wagg_core::Error;

/// Exit status for a learner that found no consistent hypothesis.
pub const EXIT_REJECT: i32 = 3;
/// Exit status for every other failure.
pub const EXIT_ERROR: i32 = 1;

/// Everything a command can fail with.
#[derive(Debug, Error)]
pub enum CliError {
    /// A library error raised while handling the named file.
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Error },
    /// A library error without file context.
    #[error(transparent)]
    Core(#[from] Error),
    /// Inconsistent or missing command-line arguments.
    #[error("{0}")]
    Usage(String),
    /// The exact learner rejected the training sequence.
    #[error("no consistent hypothesis")]
    Reject,
}

impl CliError {
    /// Stable name printed on the diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::InFile { source, .. } | CliError::Core(source) => source.name(),
            CliError::Usage(_) => "UsageError",
            CliError::Reject => "Reject",
        }
    }

    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Reject => EXIT_REJECT,
            _ => EXIT_ERROR,
        }
    }
}

/// Attaches a file path to library errors.
pub trait WithPath<T> {
    fn in_file(self, path: &Path) -> Result<T, CliError>;
}

impl<T> WithPath<T> for Result<T, Error> {
    fn in_file(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|source| CliError::InFile { path: path.to_path_buf(), source })
    }
}
