use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One validation failure tied to a 1-based line of an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

impl LineDiagnostic {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// All line-level failures found while reading one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiagnostics {
    pub path: String,
    pub diagnostics: Vec<LineDiagnostic>,
}

impl fmt::Display for FileDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} invalid record(s)",
            self.path,
            self.diagnostics.len()
        )?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    InvalidFile(FileDiagnostics),

    #[error("{path} line {line}: {message}")]
    Gazetteer {
        path: String,
        line: usize,
        message: String,
    },

    #[error("answer {answer:?} does not occur in the context of example {id:?}")]
    AnswerNotInContext { id: String, answer: String },

    #[error("no eligible random-context donor for example {id:?} after {attempts} attempts")]
    NoEligibleDonor { id: String, attempts: usize },

    #[error("duplicate prediction id {id:?}")]
    DuplicatePrediction { id: String },

    #[error("prediction id {id:?} does not match any evaluation example")]
    UnknownPredictionId { id: String },

    #[error("no prediction for evaluated example {id:?}")]
    MissingPrediction { id: String },

    #[error("behavior profile memory has no answer for example {id:?}")]
    MissingMemory { id: String },

    #[error("parametric answers only exist in multi-answer mode")]
    SingleAnswerMode,

    #[error("{0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn invalid_file(path: impl Into<String>, diagnostics: Vec<LineDiagnostic>) -> Self {
        Error::InvalidFile(FileDiagnostics {
            path: path.into(),
            diagnostics,
        })
    }
}
