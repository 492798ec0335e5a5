use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Reasons an instance file is rejected. Every variant carries the 1-based
/// line it was detected on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: malformed header {found:?}, expected `ckm v1`")]
    Header { line: usize, found: String },
    #[error("line {line}: unsupported format version {found:?}")]
    Version { line: usize, found: String },
    #[error("line {line}: dimension mismatch: {detail}")]
    Dimension { line: usize, detail: String },
    #[error("line {line}: invalid token {token:?}")]
    Token { line: usize, token: String },
    #[error("line {line}: {detail}")]
    Metric { line: usize, detail: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("master LP infeasible (offending cut: {cut:?})")]
    MasterInfeasible { cut: Option<usize> },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("pre-assignment for facilities {facilities:?} failed: {reason}")]
    Preassign { facilities: Vec<usize>, reason: String },
    #[error("cutting-plane loop gave up after {iterations} iterations ({cuts} cuts emitted)")]
    IterationsExhausted { iterations: usize, cuts: usize },
}

impl Error {
    /// Input errors map to CLI exit code 2, algorithmic failures to 1.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_) | Error::InvalidInstance(_) | Error::InvalidParameter(_)
        )
    }
}
