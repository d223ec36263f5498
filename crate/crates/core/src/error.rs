use thiserror::Error;

/// Errors raised by the numerical kernels and the scenario layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t}: required step {step:.3e} is below the minimum")]
    StepUnderflow { t: f64, step: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("homogeneous problem is not uniquely solvable (|det [UY]| = {det_abs:.3e}, threshold {threshold:.3e})")]
    NonUnique { det_abs: f64, threshold: f64 },

    #[error("det H_Y(b) vanishes (|det| = {det_abs:.3e}, threshold {threshold:.3e})")]
    SingularBoundary { det_abs: f64, threshold: f64 },

    #[error("boundary condition residual {residual:.3e} exceeds {limit:.3e}")]
    Residual { residual: f64, limit: f64 },

    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidArgument(_) | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
