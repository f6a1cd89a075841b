use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("compact set escapes the domain (eps = {eps}): {reason}")]
    Escapes { eps: f64, reason: String },

    #[error("compact set spans only {nodes} grid node(s) at h = {h}; use h <= eps/8")]
    TooCoarse { h: f64, nodes: usize },

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("zero capacity: the boundary data vanishes on the compact set")]
    ZeroCapacity,

    #[error("no dominant harmonic: zero function locally")]
    ZeroFunction,
}

impl Error {
    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Factorization(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
