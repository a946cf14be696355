use std::path::PathBuf;

use thiserror::Error;

use crate::dsl::Diagnostic;
use crate::dynamics::SimulationRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("rule file {path}: {}", render_diagnostics(.diagnostics))]
    Rules {
        path: PathBuf,
        diagnostics: Vec<Diagnostic>,
    },

    /// The log-price left the finite range. Carries every row produced
    /// before the failing step.
    #[error("numerical failure at t={t}: {message}")]
    Numerical {
        t: usize,
        message: String,
        partial: Box<SimulationRecord>,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Config/parse failures versus numerical failures, for exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
