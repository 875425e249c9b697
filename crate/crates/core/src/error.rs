use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// All variants describe bad input or an unsatisfiable request; none of them
/// signal an internal fault.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("label must be a non-empty string")]
    EmptyLabel,

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("duplicate id `{id}` in {context}")]
    DuplicateId { id: String, context: String },

    #[error("example `{example_id}` is missing from run `{run_id}`")]
    MissingExample { run_id: String, example_id: String },

    #[error("run `{run_id}` predicts unknown example `{example_id}`")]
    UnknownExample { run_id: String, example_id: String },

    #[error("gold label `{label}` of example `{example_id}` is not in the label alphabet")]
    UnknownLabel { example_id: String, label: String },

    #[error(
        "length mismatch for example `{example_id}` in {context}: expected {expected} tags, found {found}"
    )]
    LengthMismatch {
        context: String,
        example_id: String,
        expected: usize,
        found: usize,
    },

    #[error("NeedAtLeastTwoRuns: operation needs at least two runs, got {found}")]
    NeedAtLeastTwoRuns { found: usize },

    #[error("run `{run_id}` is not aligned to the evaluation set")]
    NotAligned { run_id: String },

    #[error("key sets differ: `{id}` present in only one input")]
    KeyMismatch { id: String },

    #[error("DropTooLarge: dropping {k} of {size} items leaves nothing")]
    DropTooLarge { k: usize, size: usize },

    #[error("DropTooSmall: drop rate {r} on {size} items drops zero items")]
    DropTooSmall { r: f64, size: usize },

    #[error("ClassEmptied: allocation of {allocated} would empty class `{label}`")]
    ClassEmptied { label: String, allocated: usize },

    #[error("invalid CDU plan: {0}")]
    InvalidPlan(String),

    #[error("ensemble needs at least one member")]
    EmptyMemberList,

    #[error("member index {index} out of range for {n_runs} runs")]
    IndexOutOfRange { index: usize, n_runs: usize },

    #[error("collections are not evaluated on the same evaluation set")]
    EvalSetMismatch,

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),

    #[error("infeasible simulation spec: {0}")]
    InfeasibleSpec(String),

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input is empty")]
    EmptyInput,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
