use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({x}, {y}) is not in free space")]
    NotFree { x: f64, y: f64 },

    #[error("distance matrix: {0}")]
    Matrix(String),

    #[error("malformed filtration: {0}")]
    Filtration(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("duplicate event index {0}")]
    DuplicateEvent(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDomain(_) => "invalid_domain",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotFree { .. } => "not_free",
            Error::Matrix(_) => "matrix",
            Error::Filtration(_) => "filtration",
            Error::Empty(_) => "empty",
            Error::DuplicateEvent(_) => "duplicate_event",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
