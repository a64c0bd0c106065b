use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid address: {0}")]
    InvalidAddress(String),

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("{what} cap exceeded: {requested} > {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    /// The address is maximal among its known digits, so it has no successor.
    #[error("address {0} is saturated (no successor among known digits)")]
    Saturated(String),

    #[error("point {x} not resolved within depth {depth}")]
    MaxDepthExceeded { x: f64, depth: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Config(_) | Error::InvalidAddress(_) | Error::Io(_) => 2,
            Error::NonConvergence { .. } => 3,
            Error::Assumption(_) | Error::NotApplicable(_) => 4,
            Error::CapExceeded { .. } => 5,
            Error::Saturated(_) | Error::MaxDepthExceeded { .. } => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
