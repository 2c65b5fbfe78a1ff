use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("lambda must be {0}, got {1}")]
    InvalidLambda(&'static str, f64),

    #[error("invalid subdomain: {0}")]
    InvalidDomain(String),

    #[error("field is not admissible: nonzero value {value} at `{vertex}` outside the well")]
    NotAdmissible { vertex: String, value: f64 },

    #[error("field must not vanish identically")]
    ZeroField,

    #[error("field does not change sign")]
    SingleSigned,

    #[error("field is not on the sign-changing Nehari set (residuals {0:e}, {1:e})")]
    NotInNehariSet(f64, f64),

    #[error("positive and negative supports are not adjacent (K = 0)")]
    DegenerateCoupling,

    #[error("no sign bracket found within [2^-40, 2^40]")]
    NoBracket,

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("well has {0} interior vertices; a sign-changing Dirichlet solution needs at least 2")]
    InfeasibleWell(usize),

    #[error("{free} free vertices exceed the oracle limit of {limit}")]
    DofLimitExceeded { free: usize, limit: usize },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("i/o error: {0}")]
    Io(String),
}

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

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
