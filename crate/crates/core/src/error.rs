use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular Lagrangian: kappa2^2 = {kappa2_sq} equals the mass ratio M0 = {mass_ratio}")]
    SingularLagrangian { kappa2_sq: f64, mass_ratio: f64 },

    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("viscosity must be non-negative, got {0}")]
    NegativeViscosity(f64),

    #[error("state violates the uncertainty relation: {0}")]
    UncertaintyViolation(String),

    #[error("pointer initial means must vanish, got {0:?}")]
    NonzeroMean([f64; 4]),

    #[error("noise autocorrelation diverges at t = 0")]
    EvaluationAtZero,

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("cutoff {omega_c} is within tolerance of Matsubara frequency #{index}")]
    SeriesResonance { omega_c: f64, index: u64 },

    #[error("matrix exponential failed: {0}")]
    ExpNonConvergence(String),

    #[error("mass matrix is singular")]
    SingularMass,

    #[error("inference matrix A(t) is singular at t = {t} (det = {det})")]
    SingularInference { t: f64, det: f64 },

    #[error("noise covariance has eigenvalue {eigenvalue} below tolerance {tolerance}")]
    NegativeEigenvalue { eigenvalue: f64, tolerance: f64 },

    #[error("discrete bath with {modes} modes misses the continuum kernel by {deviation:.3e} (tolerance {tolerance:.1e})")]
    InsufficientModes {
        modes: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error("minimum at interval boundary t = {t} (value {value})")]
    BoundaryMinimum { t: f64, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Errors that come from a numerical routine rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence(_)
                | Error::SeriesResonance { .. }
                | Error::ExpNonConvergence(_)
                | Error::SingularMass
                | Error::SingularInference { .. }
                | Error::NegativeEigenvalue { .. }
                | Error::InsufficientModes { .. }
                | Error::BoundaryMinimum { .. }
                | Error::EvaluationAtZero
        )
    }
}
