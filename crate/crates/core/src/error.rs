use thiserror::Error;

/// Errors raised by the estimators, the simulator and the file readers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsftsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("invalid order q={q} for dimension n={n}")]
    InvalidOrder { q: usize, n: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("no observation receives positive weight at u={u} with h={h}")]
    EmptyWindow { u: f64, h: f64 },

    #[error("rescaled time u={0} lies outside [0, 1]")]
    InvalidTime(f64),

    #[error("operator is not positive semidefinite: eigenvalue {0}")]
    NotPsd(f64),

    #[error("lag {lag} outside 1..={max}")]
    LagOutOfRange { lag: usize, max: usize },

    #[error("invalid prediction horizon: {0}")]
    Horizon(String),

    #[error("degenerate direction: long-run value {0} is not positive")]
    DegenerateDirection(f64),

    #[error("order selection undefined: all eigenvalues are zero")]
    UndefinedOrder,

    #[error("rank deficient: eigenvalue {index} is below eps0 times the leading eigenvalue")]
    RankDeficient { index: usize },

    #[error("nonstationary coefficient path: sup |a(u)| = {0} >= 1")]
    Nonstationary(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("oracle undefined: {0}")]
    OracleUndefined(String),

    #[error("brute-force reference limited to T <= 50 and n <= 16 (got T={t}, n={n})")]
    SizeCap { t: usize, n: usize },

    #[error("line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LsftsError {
    fn from(err: std::io::Error) -> Self {
        LsftsError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LsftsError>;
