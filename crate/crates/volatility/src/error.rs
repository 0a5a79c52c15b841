use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("log-likelihood is not finite ({0})")]
    NumericalUnderflow(String),

    #[error("chain divergence: {0}")]
    ChainDivergence(String),

    #[error("mode search did not converge after {iterations} Newton iterations")]
    ModeSearchFailure { iterations: usize },

    #[error("degenerate importance weights: effective sample size {ess:.1} of {draws}")]
    DegenerateWeights { ess: f64, draws: usize },

    #[error("fit holds no draws")]
    EmptyFit,

    #[error("estimates were computed on different data")]
    DataMismatch,

    #[error("nothing to rank")]
    Empty,

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{op}: need at least {need} observations, got {got}")]
    TooShort { op: &'static str, need: usize, got: usize },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] causvol_core::Error),
}
