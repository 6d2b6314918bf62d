use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or argument.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An operation was called outside the region where it is defined.
    #[error("domain error: {msg} (spectral abscissa {abscissa})")]
    Domain { msg: String, abscissa: f64 },

    /// A numerical routine failed; `residual` is the last residual seen.
    #[error("numeric error: {msg} (residual {residual:e})")]
    Numeric { msg: String, residual: f64 },

    /// A simulated path was too short for the requested functional.
    #[error("truncation error: tail bound {bound:e} exceeds tolerance")]
    Truncation { bound: f64 },

    #[error("data error: {0}")]
    Data(String),

    /// The model has no Malthusian exponent in [0, 1].
    #[error("not Malthusian in scope: {0}")]
    NotMalthusian(String),

    /// A Monte Carlo replica failed.
    #[error("replica {index} failed: {source}")]
    Replica {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { msg: msg.into(), residual }
    }

    /// Whether this error (or the replica failure it wraps) is numerical in nature.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } | Error::Domain { .. } | Error::Truncation { .. } => true,
            Error::Replica { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
