use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("cavity-bath matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("fixed point did not converge after {iterations} iterations (last delta_r = {last}, residual {residual:e})")]
    NoConvergence {
        last: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (error estimate {error:e})")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("frequency {omega} is outside the kernel support (0, {omega_c})")]
    OutOfSupport { omega: f64, omega_c: f64 },

    #[error("self-energy denominator vanishes at omega = {omega}")]
    Pole { omega: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NonHermitian { asymmetry: f64 },

    #[error("norm drift {drift:e} exceeds tolerance at t = {time}")]
    NormDrift { drift: f64, time: f64 },

    #[error("all displacements vanish; no collective mode exists")]
    NoCollectiveMode,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
