use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid country code {code:?}: {reason}")]
    InvalidCountryCode { code: String, reason: String },

    #[error("unknown country code {code} at {location}")]
    UnknownCountry { code: String, location: String },

    #[error("invalid flow record at {location}: {reason}")]
    InvalidFlow { location: String, reason: String },

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("computation error: {0}")]
    Computation(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient design matrix; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("zero-variance column: {0}")]
    ZeroVariance(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors raised before any computation starts (bad config,
    /// malformed input, missing files). The CLI maps these to exit code 2
    /// and everything else to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidCountryCode { .. }
                | Error::UnknownCountry { .. }
                | Error::InvalidFlow { .. }
                | Error::CsvParse { .. }
                | Error::Validation(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
