use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("boundary mass {ratio:.3e} exceeds tolerance {tol:.1e}")]
    BoundaryMass { ratio: f64, tol: f64 },
    #[error("band-edge energy fraction {ratio:.3e} exceeds tolerance {tol:.1e}")]
    BandEdge { ratio: f64, tol: f64 },
    #[error("relative mass drift {drift:.3e} exceeds {tol:.1e}")]
    MassDrift { drift: f64, tol: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("wrong space: expected {expected}, got {got}")]
    WrongSpace {
        expected: &'static str,
        got: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("oracle quadrature unresolved: phase step {step:.3} rad per cell (limit pi/4)")]
    OracleResolution { step: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("times must increase strictly (index {0})")]
    NonMonotoneTimes(usize),
    #[error("run too short: {0}")]
    InsufficientRun(String),
    #[error("non-positive value {value} at t = {t}")]
    NonPositiveValue { t: f64, value: f64 },
    #[error("need at least {need} points in window, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config: {field}: {msg}")]
    Config { field: String, msg: String },
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
