use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("under-resolved receiver aperture: {0}")]
    Resolution(String),

    #[error("jitter distribution truncated by the map: {0}")]
    TailTruncation(String),

    #[error("no interior maximum: {0}")]
    NoInteriorMaximum(String),

    #[error("zero acceptance probability (A + B + C = 0)")]
    ZeroAcceptance,

    #[error("secret key rate is zero over the whole search bracket")]
    AllZero,

    #[error("empty time span: {0}")]
    EmptySpan(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<FieldError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Aliasing(_) => "aliasing",
            Error::Resolution(_) => "resolution",
            Error::TailTruncation(_) => "tail_truncation",
            Error::NoInteriorMaximum(_) => "no_interior_maximum",
            Error::ZeroAcceptance => "zero_acceptance",
            Error::AllZero => "all_zero",
            Error::EmptySpan(_) => "empty_span",
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
        }
    }
}

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
