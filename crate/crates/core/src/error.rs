use std::path::PathBuf;

use thiserror::Error;

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    /// 1-based line number in the source file (header is line 1).
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: header mismatch, expected column `{expected}`")]
    Header { path: PathBuf, expected: String },

    #[error("{path}: {} rejected row(s); first: {}", .rows.len(), .rows[0])]
    Rows { path: PathBuf, rows: Vec<RowDiagnostic> },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("optimizer failed after {iterations} iterations: {reason}")]
    Optimizer {
        reason: String,
        iterations: usize,
        trace: Vec<crate::optim::TraceEntry>,
    },

    #[error("tail index boundary: xi = {xi} <= -1")]
    Boundary { xi: f64 },

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("convergence suspect: alternative loglik {alt} below null loglik {null}")]
    ConvergenceSuspect { null: f64, alt: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerical fit rather than by the inputs.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Optimizer { .. } | Error::ConvergenceSuspect { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
