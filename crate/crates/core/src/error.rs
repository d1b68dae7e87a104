use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("body is not C2+: smallest radius of curvature {min_eigenvalue:e} (threshold {threshold:e})")]
    NotCertified { min_eigenvalue: f64, threshold: f64 },

    #[error("origin is not interior: support value {value:e} at node {node}")]
    OriginNotInterior { node: usize, value: f64 },

    #[error("weight has nonpositive total mass {0:e}")]
    NonPositiveWeight(f64),

    #[error("barycenter condition violated: residual {residual:e} exceeds {tolerance:e}")]
    BarycenterViolated { residual: f64, tolerance: f64 },

    #[error("measure is a sum of two point masses")]
    TwoPointMasses,

    #[error("measure has nonzero first moments: cos {cos:e}, sin {sin:e} (tolerance {tolerance:e})")]
    NonzeroMoments { cos: f64, sin: f64, tolerance: f64 },

    #[error("singular matrix")]
    Singular,

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
