use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("point ({x}, {y}) lies outside the window")]
    PointOutsideWindow { x: f64, y: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("K-function estimate needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("window mismatch between patterns")]
    WindowMismatch,

    #[error("displacement ({dx}, {dy}) does not fit inside the window")]
    DisplacementTooLarge { dx: f64, dy: f64 },

    #[error("Strauss chain exceeded the point cap of {0}")]
    RunawayChain(usize),

    #[error("eigenvalue {0} exceeds 1: DPP does not exist for these parameters")]
    EigenvalueAboveOne(f64),

    #[error("rejection sampler exceeded {0} attempts for a single point")]
    RejectionCap(usize),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("ABC-MCMC failed to converge: {0}")]
    NonConvergence(String),

    #[error("{0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{count} point(s) outside the window at row(s) {rows:?}")]
    RowsOutsideWindow { count: usize, rows: Vec<usize> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
