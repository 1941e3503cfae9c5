use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::YearMonth;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format mismatch: {malformed} of {total} data lines malformed, first at line {first_line}: {first_content:?}")]
    FormatMismatch {
        malformed: usize,
        total: usize,
        first_line: usize,
        first_content: String,
    },

    #[error("duplicate month {month} at line {line}")]
    DuplicateMonth { month: YearMonth, line: usize },

    #[error("monthly series has gaps; missing: {}", format_months(.missing))]
    MonthGap { missing: Vec<YearMonth> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("insufficient data for {what}: need {needed}, have {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("segmentation error: {0}")]
    Segmentation(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("invalid synthetic spec: {0}")]
    Spec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("[{module}] {context}: {source}")]
    Context {
        module: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },
}

fn format_months(months: &[YearMonth]) -> String {
    months
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status: 2 input, 3 analysis, 4 config.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io { .. }
            | Error::Input(_)
            | Error::Parse { .. }
            | Error::FormatMismatch { .. }
            | Error::DuplicateMonth { .. }
            | Error::MonthGap { .. }
            | Error::Json(_) => 2,
            Error::Config(_) => 4,
            _ => 3,
        }
    }
}

/// Attaches the module name and a short description to an error.
pub trait Context<T> {
    fn context(self, module: &'static str, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for Result<T> {
    fn context(self, module: &'static str, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Context {
            module,
            context: context(),
            source: Box::new(e),
        })
    }
}
