use std::path::PathBuf;

use thiserror::Error;

use deathtoll::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Document { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
}

impl From<CoreError> for CliError {
    fn from(source: CoreError) -> Self {
        CliError::Core {
            context: "error".into(),
            source,
        }
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Document { .. } => exit::DATA,
            CliError::Core { source, .. } => match source {
                CoreError::Config(_) | CoreError::Spec(_) => exit::USAGE,
                e if e.is_convergence() => exit::CONVERGENCE,
                CoreError::Boundary { .. } | CoreError::NotNested(_) => exit::CONVERGENCE,
                _ => exit::DATA,
            },
        }
    }
}

/// Attaches a context label to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kind() {
        let opt = CoreError::Optimizer {
            reason: "max iterations".into(),
            iterations: 500,
            trace: Vec::new(),
        };
        assert_eq!(CliError::from(opt).exit_code(), exit::CONVERGENCE);
        let empty = CoreError::EmptyFile { path: "e.csv".into() };
        assert_eq!(CliError::from(empty).exit_code(), exit::DATA);
        assert_eq!(CliError::Config("x".into()).exit_code(), exit::USAGE);
    }
}
