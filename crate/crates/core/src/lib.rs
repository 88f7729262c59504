//! Exponential asymptotics laboratory for the fifth-order KdV equation
//!
//! ```text
//! ε² u'''' + u'' + 3u² − c u = 0,    u → 0 as x → ±∞
//! ```
//!
//! The crate follows the whole beyond-all-orders pipeline at desk scale:
//!
//! - [`sech_series`] generates the divergent expansion `u = Σ ε^{2n} u_n`,
//!   `c = Σ ε^{2n} c_n` exactly, with every `u_n` a polynomial in
//!   `S = sech²(γx)` over arbitrary-precision rationals.
//! - [`complex_eval`] evaluates coefficients and optimally truncated partial
//!   sums at real or complex `x`.
//! - [`late_terms`] checks the factorial-over-power growth of the late terms
//!   and extracts the singulant, the divergence exponent and the constant Λ.
//! - [`stokes_smoothing`] integrates the Stokes-multiplier equation across the
//!   Stokes line and evaluates the resulting exponentially small tail.
//! - [`bvp`] solves the full nonlinear problem with Newton's method and
//!   measures the oscillatory tail that the asymptotics predicts.
//! - [`harness`] ties everything together into reproducible experiments that
//!   write CSV / JSON artifacts (used by the `kdv5` binary).

// Numeric code: `!(x > 0.0)` rejects NaN on purpose, and index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod bvp;
pub mod complex_eval;
pub mod error;
pub mod harness;
pub mod late_terms;
pub mod sech_series;
pub mod stokes_smoothing;

pub use error::{Error, Result};

/// Sech width used throughout unless overridden.
pub const DEFAULT_GAMMA: i64 = 1;

/// Late-term constant used by tail predictions unless a measured value is supplied.
pub const DEFAULT_LAMBDA: f64 = -19.97;
