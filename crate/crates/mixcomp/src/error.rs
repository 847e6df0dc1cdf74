//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// An argument violates a documented precondition.
    InvalidInput(String),
    /// The model cannot assign responsibilities (e.g. no positive weight).
    DegenerateModel(String),
    /// A density evaluation left the representable range; `index` names the
    /// offending data point.
    NumericalDomain { index: usize, detail: String },
    /// Fewer data points than fitted components.
    InsufficientData { needed: usize, got: usize },
    /// Every restart of an iterative fit collapsed.
    FitFailure(String),
    /// A sequential step could not produce a model; `t` is the 1-based
    /// timestep.
    StepFailure { t: usize, source: Box<Error> },
    /// A hard assignment points at a zero-weight component.
    InvalidAssignment { index: usize, component: usize },
    /// A malformed row in a text input; `line` is 1-based.
    Parse { line: usize, detail: String },
    /// The input is missing required columns or has an unusable header.
    Schema(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DegenerateModel(msg) => write!(f, "degenerate model: {msg}"),
            Error::NumericalDomain { index, detail } => {
                write!(f, "numerical domain error at point {index}: {detail}")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need at least {needed} points, got {got}")
            }
            Error::FitFailure(msg) => write!(f, "fit failure: {msg}"),
            Error::StepFailure { t, source } => write!(f, "step {t} failed: {source}"),
            Error::InvalidAssignment { index, component } => write!(
                f,
                "assignment at point {index} names component {component} with zero weight"
            ),
            Error::Parse { line, detail } => write!(f, "parse error at line {line}: {detail}"),
            Error::Schema(msg) => write!(f, "schema error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::StepFailure { source, .. } => Some(source),
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
