use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or parameter combination.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A Fock state that does not belong to the sector.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Basis incompatible with the requested model.
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    /// Problem too large for the requested method.
    #[error("resource error: {0}")]
    Resource(String),

    /// Iterative or dense numerical routine failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn fit(msg: impl Into<String>) -> Self {
        Error::Fit(msg.into())
    }

    /// True for failures of a numerical method rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Fit(_) | Error::Resource(_))
    }
}
