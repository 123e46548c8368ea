use thiserror::Error;

/// Errors produced by the library. Outcomes such as "not typical" or
/// "infeasible" are ordinary results, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("parameter `{name}` = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("transition matrix is not irreducible")]
    ReducibleChain,

    #[error("target set is not reached almost surely from state {0}")]
    Unreachable(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("certificate does not extend to the periodicized sequence: {0}")]
    CertificateMismatch(String),

    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid polyhedron: {0}")]
    InvalidPolyhedron(String),

    #[error("linear solve failed: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_open_interval(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value > lo && value < hi && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value,
            range: format!("({lo}, {hi})"),
        })
    }
}
