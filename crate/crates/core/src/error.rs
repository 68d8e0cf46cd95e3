use thiserror::Error;

pub type Result<T, E = DadlError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DadlError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("solver failed to converge on a {rows}x{cols} matrix")]
    SolverFailure { rows: usize, cols: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DadlError {
    pub(crate) fn dims(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        got: impl std::fmt::Display,
    ) -> Self {
        DadlError::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// True for failures that come from the numbers themselves rather than
    /// from how the run was configured.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DadlError::NotPositiveDefinite(_)
                | DadlError::SolverFailure { .. }
                | DadlError::DegenerateData(_)
                | DadlError::Singular(_)
                | DadlError::NonFinite { .. }
        )
    }
}

impl From<csv::Error> for DadlError {
    fn from(e: csv::Error) -> Self {
        DadlError::Format(e.to_string())
    }
}

impl From<serde_json::Error> for DadlError {
    fn from(e: serde_json::Error) -> Self {
        DadlError::Format(e.to_string())
    }
}
