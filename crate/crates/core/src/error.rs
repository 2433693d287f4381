use std::path::PathBuf;

use thiserror::Error;

use crate::inventory::RuleId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: expected {expected} values, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("unknown rule name `{0}`")]
    UnknownRule(String),

    #[error("relation {relation} is infeasible over domain {lo}..={hi}")]
    Infeasible { relation: String, lo: i32, hi: i32 },

    #[error("no panel can satisfy {0} given the row prefix")]
    InfeasibleCompletion(RuleId),

    #[error("generation failed for {rule}{}: {reason}", index.map(|i| format!(" (sample {i})")).unwrap_or_default())]
    Generation { rule: RuleId, index: Option<u64>, reason: String },

    #[error("completion context is invalid: {0}")]
    InvalidContext(String),

    #[error("no rule is shared by the first two rows")]
    NoSharedRule,

    #[error("every shared rule is infeasible for the third-row prefix")]
    AllInfeasible,

    #[error("malformed test case: {0}")]
    TestCase(String),

    #[error("alignment error: {tests} tests vs {completions} completions")]
    Alignment { tests: usize, completions: usize },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("format error at line {line}: {reason}")]
    TextFormat { line: usize, reason: String },

    #[error("value {value} at grid position {position} does not fit a signed byte")]
    Unencodable { position: usize, value: i32 },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    pub fn at_record(self, index: usize) -> Error {
        Error::Record { index, source: Box::new(self) }
    }

    /// The innermost error, through file/record context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } | Error::Record { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
