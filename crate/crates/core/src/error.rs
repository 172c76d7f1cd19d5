use thiserror::Error;

use crate::io::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: N_trunc = {n_trunc}, need at least 1")]
    InvalidDimension { n_trunc: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Fock index ({n1}, {n2}) outside truncated space with N_trunc = {n_trunc}")]
    IndexOutOfRange { n1: usize, n2: usize, n_trunc: usize },

    #[error("all amplitudes are zero, state cannot be normalised")]
    DegenerateState,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("step size too large: dt = {dt:e}, |L| = {norm:e}, dt*|L| = {product:.3} exceeds 0.1")]
    StepSize { dt: f64, norm: f64, product: f64 },

    #[error("integration needs {needed} steps, limit is {limit}")]
    TooManySteps { needed: usize, limit: usize },

    #[error("positivity violated: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    Positivity { eigenvalue: f64, tolerance: f64 },

    #[error("state not Hermitian: max |rho - rho^dag| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} outside [0, 1]")]
    TraceOutOfRange { trace: f64 },

    #[error("factorised propagator is singular at t = {t}: |F1| = {abs_f1:e}")]
    SingularFactorization { t: f64, abs_f1: f64 },

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("reservoir spectrum is empty")]
    EmptySpectrum,

    #[error("parameters are not on the decoherence-free manifold for kappa = {kappa}: relative residual {residual:e}")]
    NotOnDfsManifold { kappa: f64, residual: f64 },

    #[error("overlay time {t} outside model range [{min}, {max}]")]
    OverlayRange { t: f64, min: f64, max: f64 },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension { .. }
                | Error::DimensionMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::DegenerateState
                | Error::InvalidParameter { .. }
                | Error::EmptySpectrum
                | Error::NotOnDfsManifold { .. }
                | Error::OverlayRange { .. }
                | Error::Config(_)
        )
    }

    /// Errors raised by numerical diagnostics (positivity, stability, singularities).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSize { .. }
                | Error::TooManySteps { .. }
                | Error::Positivity { .. }
                | Error::NotHermitian { .. }
                | Error::TraceOutOfRange { .. }
                | Error::SingularFactorization { .. }
                | Error::Truncation(_)
        )
    }

    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
