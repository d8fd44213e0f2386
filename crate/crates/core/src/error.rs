use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is undefined for this exponent (e.g. the conjugate of φ_1).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A supremum could not be bracketed; the function is not superlinear.
    #[error("supremum not bracketed after {expansions} expansions (last bracket end {last_bound:e})")]
    Divergence { expansions: usize, last_bound: f64 },

    /// Quadrature, special-function or root iteration did not converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The ratio defining τ_φp is still growing at the end of the λ-grid.
    #[error("variable is not φ_p-subgaussian for p = {p}: {detail}")]
    NotSubgaussian { p: f64, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid experiment configuration (unknown distribution kind, bad grid...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
