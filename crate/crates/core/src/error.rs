use thiserror::Error;

/// Errors raised by the expansion, sampling, solver and construction APIs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} lies outside (0, 1]")]
    OutOfRange(String),

    #[error("could not parse {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("digit word must be nonempty")]
    EmptyWord,

    #[error("digit must be >= 1, got {0}")]
    InvalidDigit(u64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no root in the search interval; the defining sum never reaches 1 (supremum {supremum})")]
    NoRootInRange { supremum: f64 },

    #[error("invalid construction spec: {0}")]
    InvalidSpec(String),

    #[error("word {word} is not admissible for this construction: {reason}")]
    InadmissibleWord { word: String, reason: String },

    #[error("operation requires the {expected} flavor")]
    WrongFlavor { expected: &'static str },

    #[error("enumeration budget of {budget} words exhausted at rank {rank}")]
    Truncated { rank: usize, budget: usize },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(input: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}
