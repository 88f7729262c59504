use num::complex::Complex64;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("recurrence failure at order {order}: {reason}")]
    Recurrence { order: usize, reason: String },

    #[error("n_max = {requested} exceeds the configured limit of {limit}")]
    ResourceLimit { requested: usize, limit: usize },

    #[error("x = {x} is too close to a pole of sech^2 (|cosh| = {cosh_modulus:e})")]
    PoleProximity { x: Complex64, cosh_modulus: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("theta = {theta} lies outside the validity wedge of the multiplier equation")]
    OutsideValidityWedge { theta: f64 },

    #[error(
        "quadrature did not converge; worst subinterval [{lo}, {hi}] with error estimate {error:e}"
    )]
    QuadratureNonConvergence { lo: f64, hi: f64, error: f64 },

    #[error("Newton iteration did not converge in {iterations} steps (last update {last_update:e}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        residual: f64,
    },

    #[error("linear solve failed: {0}")]
    IllConditioned(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("tail window contaminated by the core: core level {core:e} exceeds 10% of predicted tail {predicted:e}; increase the domain length")]
    WindowContaminated { core: f64, predicted: f64 },

    #[error("exponent fit unreliable: r^2 = {r_squared:.6} < 0.99")]
    PoorFit { r_squared: f64 },

    #[error("malformed table document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by bad inputs rather than by the mathematics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Resolution(_)
                | Error::InsufficientData(_)
                | Error::ResourceLimit { .. }
                | Error::WindowContaminated { .. }
                | Error::OutsideValidityWedge { .. }
                | Error::Format(_)
        )
    }

    /// Process exit code: 1 for math failures, 2 for validation failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
