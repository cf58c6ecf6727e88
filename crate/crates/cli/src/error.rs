use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("{failed} of {total} estimator checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::ChecksFailed { .. } => 1,
            HarnessError::Validation(_) => 2,
            HarnessError::Aborted(_) | HarnessError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

pub(crate) fn invalid(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Validation(e.to_string())
}
