use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("{value} lies outside the domain of the convex function")]
    DomainViolation { value: f64 },

    #[error("geometry undefined at |x| = {norm} (ball gradient needs |x| >= {r_min})")]
    GeometryUndefined { norm: f64, r_min: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("normal equations are rank deficient ({terms} basis terms)")]
    SingularRegression { terms: usize },

    #[error("monotone root solve failed: {0}")]
    RootFindFailure(String),

    #[error("Picard iteration did not converge after {} iterations", residuals.len())]
    NonConvergence { residuals: Vec<f64> },

    #[error("{value} is not in the range of the flow")]
    OutOfRange { value: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("comparison hypothesis violated: {0}")]
    HypothesisViolation(String),
}

impl Error {
    pub(crate) fn bad(msg: impl Into<String>) -> Self {
        Error::BadParameter(msg.into())
    }
}
