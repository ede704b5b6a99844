//! Error type shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by the library.
///
/// Variants are grouped by contract rather than by module: `Domain` means an
/// argument violated a precondition, `IllConditioned` means the inputs were
/// legal but the requested quantity is numerically meaningless, and the two
/// `Degenerate*` variants mean the data cannot determine the requested model.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs were legal but the computation would amplify rounding error
    /// beyond usefulness (for example a heating fraction that underflows).
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// The points cannot determine the requested geometric model.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The observations carry no information about the requested parameters.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A text input failed to parse; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: u64,
        msg: String,
    },

    /// An I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

/// Rejects non-finite or otherwise malformed scalar arguments.
///
/// `name` appears verbatim in the error message.
pub(crate) fn ensure_finite(value: f64, name: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}
