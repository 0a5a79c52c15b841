use thiserror::Error;

use crate::series::Period;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: need at least {need} observations, got {got}")]
    TooShort {
        op: &'static str,
        need: usize,
        got: usize,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("{path}: cannot parse cell at row {row}, column `{column}`: {value:?}")]
    UnparseableCell {
        path: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: duplicate timestamp {period} at row {row}")]
    DuplicateTimestamp {
        path: String,
        row: usize,
        period: Period,
    },

    #[error("{path}: gap in monthly timestamps between {before} and {after}")]
    NonContiguous {
        path: String,
        before: Period,
        after: Period,
    },

    #[error("{path}: file has no data rows")]
    EmptyFile { path: String },

    #[error("series `{name}`: non-finite value at index {index}")]
    NonFinite { name: String, index: usize },

    #[error("timestamp ranges differ: {left} vs {right}")]
    TimestampMismatch { left: String, right: String },

    #[error("deflator is not strictly positive at index {index}")]
    NonpositiveDeflator { index: usize },

    #[error("series must be strictly positive, found {value} at index {index}")]
    NonpositiveValue { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("singular regression design in {context}")]
    SingularRegression { context: String },

    #[error("degenerate epsilon: one-dimensional correlation integral is {c1}")]
    DegenerateEpsilon { c1: f64 },

    #[error("degenerate distances: conditioning correlation integral {value:e} below guard")]
    DegenerateDistances { value: f64 },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("quantile regression did not converge at tau = {tau}")]
    NonConvergence { tau: f64 },

    #[error("invalid quantile grid: {0}")]
    InvalidGrid(String),

    #[error("subsample block size {block} invalid for sample of {len} (need b >= 20 and at least 50 blocks)")]
    BlockTooShort { block: usize, len: usize },

    #[error("collinear regressors in {context}")]
    Collinear { context: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}
