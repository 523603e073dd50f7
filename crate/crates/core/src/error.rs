use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A numerical check failed; `invariant` names the property that broke.
    #[error("numerical failure [{invariant}]: {detail}")]
    Numerical { invariant: String, detail: String },
    #[error("config error: {0}")]
    Config(String),
    /// A truncated series did not reach its error bound; the partial sum is
    /// kept for inspection.
    #[error("series truncated after {terms} terms with tail bound {tail_bound:e}")]
    Truncated {
        terms: usize,
        tail_bound: f64,
        partial: Vec<f64>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numerical(invariant: &str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            invariant: invariant.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
