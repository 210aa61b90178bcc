use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Jacobi parameters alpha={alpha}, beta={beta}: {reason}")]
    InvalidParams { alpha: f64, beta: f64, reason: &'static str },

    #[error("argument {value} outside [-1, 1]")]
    Domain { value: f64 },

    #[error("weight is singular at t={t} (exponent {exponent} < 0)")]
    EndpointSingularity { t: f64, exponent: f64 },

    #[error("invalid degree {degree}: {reason}")]
    InvalidDegree { degree: usize, reason: &'static str },

    #[error("integrand is not integrable: exponent {exponent} <= -1 at t={t}")]
    NonIntegrable { t: f64, exponent: f64 },

    #[error("quadrature tolerance {tol:e} not reached (estimate {estimate:e}) within {panels} panels")]
    ToleranceNotReached { tol: f64, estimate: f64, panels: usize },

    #[error("quadrature rule of order {0} is not supported")]
    UnsupportedOrder(usize),

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
