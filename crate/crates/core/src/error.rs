use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state")]
    NonFiniteState,
    #[error("covariance not repairable")]
    CovarianceNotRepairable,
    #[error("non-finite value from mapped sigma point {index}")]
    NonFiniteSigmaPoint { index: usize },
    #[error("retained block singular")]
    RetainedBlockSingular,
    #[error("Schur complement not positive (dimension {dim})")]
    SchurNotPositive { dim: usize },
    #[error("invalid log-determinant (dimension {dim})")]
    InvalidLogDeterminant { dim: usize },
    #[error("innovation covariance singular")]
    SingularInnovation,
    #[error("singular matrix: {0}")]
    Singular(&'static str),
    #[error("Jacobian singular at sensor location")]
    JacobianAtSensor,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("time step {k}: {source}")]
    AtStep {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_step(self, k: usize) -> Self {
        Error::AtStep {
            k,
            source: Box::new(self),
        }
    }

    /// Innermost error, with step context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } | Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}
