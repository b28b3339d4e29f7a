use std::path::PathBuf;

use infuse_core::eval::EvalError;
use infuse_core::filter::FilterError;
use infuse_core::fit::FitError;
use infuse_core::inject::InjectError;
use infuse_core::scoring::ScoreError;
use infuse_core::templating::TemplateError;
use infuse_core::TripleError;
use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}: dataset is empty")]
    EmptyDataset(PathBuf),
    #[error("missing upstream artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error("no run records to report on")]
    NoRecords,
    #[error("{0}")]
    Invalid(String),
    #[error("verification failed: {deficits} statements under-counted")]
    VerifyFailed { deficits: usize },
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Exit status for a failure: 2 for bad input or configuration, 3 for runtime trouble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Validation,
    Runtime,
}

impl Severity {
    pub fn exit_code(self) -> i32 {
        match self {
            Severity::Validation => 2,
            Severity::Runtime => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), line, message: message.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::Config(_) => "config",
            Error::NoRecords => "no_records",
            Error::Invalid(_) => "invalid",
            Error::VerifyFailed { .. } => "verify_failed",
            Error::Triple(_) => "triple",
            Error::Template(_) => "template",
            Error::Filter(_) => "filter",
            Error::Inject(InjectError::BudgetExceeded { .. }) => "budget_exceeded",
            Error::Inject(_) => "inject",
            Error::Eval(_) => "eval",
            Error::Score(_) => "score",
            Error::Fit(_) => "fit",
        }
    }

    pub fn severity(&self) -> Severity {
        match self {
            Error::Io { .. } | Error::Fit(FitError::NotConverged | FitError::AllStartsDiverged(_)) => Severity::Runtime,
            Error::Inject(InjectError::BudgetExceeded { .. }) | Error::VerifyFailed { .. } => Severity::Runtime,
            _ => Severity::Validation,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { kind: self.kind(), message: self.to_string(), exit_code: self.severity().exit_code() }
    }
}
