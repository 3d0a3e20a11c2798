use std::path::PathBuf;

use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Bad flags, unreadable files, malformed input or oversize oracle runs.
pub const EXIT_USAGE: u8 = 1;
/// No alignment within the upper bound.
pub const EXIT_NO_SOLUTION: u8 = 2;
/// Memory budget exceeded.
pub const EXIT_MEMORY: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: iddp::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: iddp::Error) -> Self {
        Self::Core {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core {
                source: iddp::Error::NoSolution { .. },
                ..
            } => EXIT_NO_SOLUTION,
            Self::Core {
                source: iddp::Error::MemoryBudget(_),
                ..
            } => EXIT_MEMORY,
            _ => EXIT_USAGE,
        }
    }

    /// Short status word used in bench tables.
    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            EXIT_NO_SOLUTION => "no_solution",
            EXIT_MEMORY => "memory",
            _ => "error",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
