use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix is not positive definite: leading minor {index} is {minor}")]
    NotPositiveDefinite { index: usize, minor: String },

    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },

    #[error("form is not even (integral with even diagonal)")]
    NotEven,

    #[error("form is not integral")]
    NotIntegral,

    #[error("invalid design strength t = {0}: must be even and positive")]
    InvalidStrength(u32),

    #[error("bound must be positive")]
    NonPositiveBound,

    #[error("enumeration budget of {budget} vectors exceeded below norm {bound}")]
    BudgetExceeded { budget: usize, bound: String },

    #[error("Epstein zeta has a pole at s = {0}")]
    Pole(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownLattice(String),

    #[error("corrupted catalog data: {0}")]
    Catalog(String),

    #[error("pair sum below the design bound on layer {norm}: {lhs} < {rhs}")]
    InequalityViolated { norm: String, lhs: String, rhs: String },

    #[error("pair-sum and moment tests disagree on layer {norm}")]
    RouteDisagreement { norm: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
