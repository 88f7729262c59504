//! Late-order behaviour of the series: factorial-over-power growth, the
//! singulant and the constant Λ.
//!
//! Near the upper singularity `σ = iπ/(2γ)` we have `S ∼ −1/(γ²χ²)` with
//! `χ = x − σ`, so only the top coefficient `a_{n,n+1}` of `u_n` reaches the
//! pole order `χ^{−(2n+2)}`. Matching to
//!
//! ```text
//! u_n ∼ Λ (−1)^n Γ(2n + 2) / χ^{2n+2}
//! ```
//!
//! gives `Λ_n = −a_{n,n+1} γ^{−(2n+2)} / Γ(2n+2)`, which converges to Λ with
//! corrections in powers of `1/n`. The `(−1)^n` is the `χ' = ±1` branch of the
//! eikonal equation written in terms of `x − σ`; without it `Λ_n` alternates.

use std::f64::consts::FRAC_PI_2;

use num::complex::Complex64;
use num::{BigInt, BigRational, Signed, ToPrimitive};
use serde::Serialize;
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use crate::complex_eval::eval_coefficient;
use crate::error::{Error, Result};
use crate::sech_series::SeriesTable;

/// Power shift in `Γ(2n + β)` forced by the double pole of `u_0`.
pub const BETA_EXPONENT: u32 = 2;

/// Smallest table depth accepted by the late-term analysis.
pub const MIN_DEPTH: usize = 5;

/// Default Richardson order.
pub const DEFAULT_ORDER: usize = 3;

/// One Richardson estimate with its error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub order: usize,
    pub estimate: f64,
    pub error_bound: f64,
}

/// Quality of the constancy fit of `|a_{n,n+1}| / Γ(2n + β)` for one β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaCandidate {
    pub beta: u32,
    /// Fitted exponent `p` in `|a_{n,n+1}| / Γ(2n+β) ∝ n^p`; zero for the right β.
    pub drift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub measured: f64,
    pub predicted: f64,
}

impl RatioRow {
    pub fn agreement(&self) -> f64 {
        self.measured / self.predicted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTest {
    pub x: f64,
    pub rows: Vec<RatioRow>,
    /// Orders skipped because `u_n(x)` was numerically zero.
    pub gaps: Vec<usize>,
}

impl RatioTest {
    /// `χ²` implied by the measured ratio at order `n` when `x = 0`:
    /// `u_{n+1}/u_n = −(2n+2)(2n+3)/χ²`.
    pub fn chi_squared_at(&self, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n)
            .map(|r| -(((2 * n + 2) * (2 * n + 3)) as f64) / r.measured)
    }
}

/// A Stokes line: a ray from a singularity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesRay {
    pub origin: Complex64,
    pub direction: Complex64,
}

impl StokesRay {
    /// Whether `z` lies on the ray, to within `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        let d = z - self.origin;
        let along = (d * self.direction.conj()).re;
        let across = (d * self.direction.conj()).im;
        along >= -tol && across.abs() <= tol
    }

    /// Real-axis intersection, if the ray reaches it.
    pub fn real_axis_crossing(&self) -> Option<f64> {
        if self.direction.im == 0.0 {
            return None;
        }
        let t = -self.origin.im / self.direction.im;
        (t >= 0.0).then_some(self.origin.re + t * self.direction.re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesGeometry {
    /// From `+σ` down the imaginary axis.
    pub upper: StokesRay,
    /// From `−σ` up the imaginary axis.
    pub lower: StokesRay,
}

impl StokesGeometry {
    pub fn rays(&self) -> [StokesRay; 2] {
        [self.upper, self.lower]
    }

    /// A real point reached from `x = −∞` has crossed both lines iff `x > 0`.
    pub fn crossed(&self, x: f64) -> bool {
        self.rays()
            .iter()
            .all(|r| r.real_axis_crossing().is_some_and(|c| x > c))
    }

    pub fn on_a_line(&self, z: Complex64, tol: f64) -> bool {
        self.rays().iter().any(|r| r.contains(z, tol))
    }
}

/// Stokes condition `Im[−χ²] = 0`, `Re[−χ²] ≥ 0`.
pub fn is_stokes_direction(chi: Complex64, tol: f64) -> bool {
    let w = -chi * chi;
    w.im.abs() <= tol * w.norm().max(1.0) && w.re >= -tol
}

pub fn stokes_line_geometry(gamma: f64) -> Result<StokesGeometry> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let sigma = Complex64::new(0.0, FRAC_PI_2 / gamma);
    Ok(StokesGeometry {
        upper: StokesRay {
            origin: sigma,
            direction: Complex64::new(0.0, -1.0),
        },
        lower: StokesRay {
            origin: -sigma,
            direction: Complex64::new(0.0, 1.0),
        },
    })
}

fn ln_abs_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_abs_rational(r: &BigRational) -> f64 {
    ln_abs_big(r.numer()) - ln_abs_big(r.denom())
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

fn check_depth(table: &SeriesTable) -> Result<()> {
    if table.is_empty() || table.n_max() < MIN_DEPTH {
        return Err(Error::InsufficientData(format!(
            "late-term analysis needs n_max ≥ {MIN_DEPTH}, table has n_max = {}",
            table.len() as isize - 1
        )));
    }
    Ok(())
}

/// Top coefficient of `u_n` with the width scaled out: `a_{n,n+1} γ^{−(2n+2)}`.
fn scaled_top(table: &SeriesTable, n: usize) -> BigRational {
    let mut g_pow = BigRational::from_integer(1.into());
    for _ in 0..(2 * n + 2) {
        g_pow *= table.gamma();
    }
    table.u(n).coeff(n as u32 + 1) / g_pow
}

/// `Λ_n = −a_{n,n+1} γ^{−(2n+2)} / Γ(2n+2)` for every order in the table.
pub fn lambda_sequence(table: &SeriesTable) -> Result<Vec<f64>> {
    check_depth(table)?;
    Ok((0..table.len())
        .map(|n| {
            let exact = -scaled_top(table, n) / BigRational::from_integer(factorial(2 * n + 1));
            exact.to_f64().unwrap_or(f64::NAN)
        })
        .collect())
}

/// All order-`k` Richardson extrapolants of `seq`, where `seq[i]` is the
/// term with index `first_n + i`.
pub fn richardson_extrapolants(seq: &[f64], order: usize, first_n: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "Richardson order must be ≥ 1".into(),
        ));
    }
    if seq.len() <= order {
        return Err(Error::InsufficientData(format!(
            "order {order} Richardson needs more than {order} terms, got {}",
            seq.len()
        )));
    }
    let k = order as i32;
    let mut inv_fact = vec![1.0; order + 1];
    for j in 1..=order {
        inv_fact[j] = inv_fact[j - 1] / j as f64;
    }
    Ok((0..seq.len() - order)
        .map(|i| {
            let n = first_n + i;
            (0..=order)
                .map(|j| {
                    let sign = if (order + j).is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * seq[i + j] * ((n + j) as f64).powi(k) * inv_fact[j] * inv_fact[order - j]
                })
                .sum()
        })
        .collect())
}

/// Richardson estimate for a sequence indexed from 1, eliminating
/// `1/n, …, 1/n^order` corrections.
pub fn richardson_extrapolate(seq: &[f64], order: usize) -> Result<Extrapolation> {
    richardson_extrapolate_from(seq, order, 1)
}

pub fn richardson_extrapolate_from(
    seq: &[f64],
    order: usize,
    first_n: usize,
) -> Result<Extrapolation> {
    let r = richardson_extrapolants(seq, order, first_n)?;
    let estimate = r[r.len() - 1];
    let previous = if r.len() >= 2 {
        r[r.len() - 2]
    } else {
        seq[seq.len() - 1]
    };
    Ok(Extrapolation {
        order,
        estimate,
        error_bound: (estimate - previous).abs(),
    })
}

/// Drift of `|a_{n,n+1} γ^{−(2n+2)}| / Γ(2n+β)` over `n ∈ [n_lo, n_hi]` for
/// β = 0..=4, sorted by the table's β.
pub fn beta_fit(table: &SeriesTable, n_lo: usize, n_hi: usize) -> Result<Vec<BetaCandidate>> {
    check_depth(table)?;
    if n_hi > table.n_max() || n_hi < n_lo + 2 || n_lo == 0 {
        return Err(Error::InsufficientData(format!(
            "β fit range [{n_lo}, {n_hi}] not usable with n_max = {}",
            table.n_max()
        )));
    }
    let logs: Vec<(f64, f64)> = (n_lo..=n_hi)
        .map(|n| ((n as f64).ln(), ln_abs_rational(&scaled_top(table, n))))
        .collect();
    Ok((0..=4)
        .map(|beta| {
            let pts: Vec<(f64, f64)> = logs
                .iter()
                .zip(n_lo..)
                .map(|(&(ln_n, ln_a), n)| (ln_n, ln_a - ln_gamma((2 * n) as f64 + beta as f64)))
                .collect();
            let (slope, _, _) = linear_regression(&pts);
            BetaCandidate { beta, drift: slope }
        })
        .collect())
}

/// The β whose candidate has the smallest absolute drift.
pub fn best_beta(candidates: &[BetaCandidate]) -> Option<u32> {
    candidates
        .iter()
        .min_by(|a, b| a.drift.abs().total_cmp(&b.drift.abs()))
        .map(|c| c.beta)
}

/// Least squares `y = slope·x + intercept`; returns `(slope, intercept, r²)`.
pub(crate) fn linear_regression(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Consecutive-term ratios `u_{n+1}(x)/u_n(x)` against the two-singularity
/// prediction `−(2n+2)(2n+3) Re[χ^{−(2n+4)}] / Re[χ^{−(2n+2)}]`.
pub fn ratio_test(table: &SeriesTable, x: f64) -> Result<RatioTest> {
    check_depth(table)?;
    let gamma = table.gamma_f64();
    let chi = Complex64::new(x, -FRAC_PI_2 / gamma);
    let xs = Complex64::new(x, 0.0);
    let values = (0..table.len())
        .map(|n| eval_coefficient(table.u(n), xs).map(|v| v.re))
        .collect::<Result<Vec<f64>>>()?;
    let pole = |n: usize| chi.powi(-(2 * n as i32 + 2)).re;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for n in 0..table.n_max() {
        // Size of u_n expected from the singularity, as a yardstick for "zero".
        let ln_scale = ln_gamma((2 * n + 2) as f64) - (2 * n + 2) as f64 * chi.norm().ln();
        let tiny = (ln_scale.exp() * 1e-12).max(f64::MIN_POSITIVE);
        if values[n].abs() < tiny || pole(n) == 0.0 {
            gaps.push(n);
            continue;
        }
        let predicted = -(((2 * n + 2) * (2 * n + 3)) as f64) * pole(n + 1) / pole(n);
        rows.push(RatioRow {
            n,
            measured: values[n + 1] / values[n],
            predicted,
        });
    }
    Ok(RatioTest { x, rows, gaps })
}

/// Everything the late-term analysis extracts from a table.
#[derive(Clone, Debug, PartialEq)]
pub struct SingulantReport {
    pub sigma: Complex64,
    pub chi_prime: i8,
    pub beta_exponent: u32,
    pub beta_fit: Vec<BetaCandidate>,
    pub lambda_sequence: Vec<f64>,
    /// Last extrapolant for each Richardson order that the table supports.
    pub lambda_extrapolants: Vec<Extrapolation>,
    pub lambda_final: Extrapolation,
    pub ratio_table: RatioTest,
}

impl SingulantReport {
    pub fn to_json(&self) -> Value {
        json!({
            "sigma": [self.sigma.re, self.sigma.im],
            "chi_prime": self.chi_prime,
            "beta_exponent": self.beta_exponent,
            "beta_fit": self.beta_fit,
            "lambda_sequence": self.lambda_sequence,
            "extrapolants": self.lambda_extrapolants,
            "lambda_final": self.lambda_final,
            "ratio_table": self.ratio_table,
        })
    }

    /// `n,lambda_n` lines with a header.
    pub fn lambda_csv(&self) -> String {
        let mut out = String::from("n,lambda_n\n");
        for (n, l) in self.lambda_sequence.iter().enumerate() {
            out.push_str(&format!("{n},{l:.17e}\n"));
        }
        out
    }
}

/// Highest Richardson order reported in the extrapolant table.
pub const MAX_REPORTED_ORDER: usize = 6;

pub fn analyse(table: &SeriesTable, order: usize) -> Result<SingulantReport> {
    let lambda = lambda_sequence(table)?;
    let lambda_final = richardson_extrapolate_from(&lambda, order, 0)?;
    let lambda_extrapolants = (1..=MAX_REPORTED_ORDER.min(lambda.len() - 1))
        .map(|k| richardson_extrapolate_from(&lambda, k, 0))
        .collect::<Result<Vec<_>>>()?;
    let n_lo = 10.min(table.n_max() / 2).max(1);
    let beta_fit = beta_fit(table, n_lo, table.n_max())?;
    let beta_exponent = best_beta(&beta_fit).unwrap_or(BETA_EXPONENT);
    let gamma = table.gamma_f64();
    Ok(SingulantReport {
        sigma: Complex64::new(0.0, FRAC_PI_2 / gamma),
        chi_prime: 1,
        beta_exponent,
        beta_fit,
        lambda_sequence: lambda,
        lambda_extrapolants,
        lambda_final,
        ratio_table: ratio_test(table, 0.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sech_series::build_series;
    use approx::assert_relative_eq;
    use num::One;

    fn table(n_max: usize) -> SeriesTable {
        build_series(n_max, BigRational::one()).unwrap()
    }

    #[test]
    fn first_lambda_terms() {
        let l = lambda_sequence(&table(6)).unwrap();
        assert_eq!(l[0], -2.0);
        assert_eq!(l[1], -5.0);
        // a_{2,3} = 930, Γ(6) = 120.
        assert_eq!(l[2], -7.75);
    }

    #[test]
    fn lambda_is_width_independent() {
        let a = lambda_sequence(&table(8)).unwrap();
        let b = lambda_sequence(&build_series(8, BigRational::from_integer(3.into())).unwrap())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shallow_tables_are_rejected() {
        assert!(matches!(
            lambda_sequence(&table(3)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn richardson_constant_and_harmonic() {
        let c = richardson_extrapolate(&[3.5; 8], 2).unwrap();
        assert_eq!(c.estimate, 3.5);
        assert_eq!(c.error_bound, 0.0);
        let seq: Vec<f64> = (1..=10).map(|n| 1.0 + 1.0 / n as f64).collect();
        let r = richardson_extrapolate(&seq, 1).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-10);
        let seq2: Vec<f64> = (1..=12)
            .map(|n| 2.0 - 3.0 / n as f64 + 5.0 / (n * n) as f64)
            .collect();
        assert!((richardson_extrapolate(&seq2, 2).unwrap().estimate - 2.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_needs_enough_terms() {
        assert!(matches!(
            richardson_extrapolate(&[1.0, 2.0, 3.0], 3),
            Err(Error::InsufficientData(_))
        ));
        assert!(richardson_extrapolate(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn geometry_for_two_widths() {
        let g = stokes_line_geometry(1.0).unwrap();
        assert_relative_eq!(g.upper.origin.im, FRAC_PI_2);
        assert_eq!(g.upper.direction, Complex64::new(0.0, -1.0));
        assert_eq!(g.lower.direction, Complex64::new(0.0, 1.0));
        assert_eq!(g.upper.real_axis_crossing(), Some(0.0));
        assert_eq!(g.lower.real_axis_crossing(), Some(0.0));
        let g2 = stokes_line_geometry(2.0).unwrap();
        assert_relative_eq!(g2.upper.origin.im, std::f64::consts::FRAC_PI_4);
        assert_relative_eq!(g2.lower.origin.im, -std::f64::consts::FRAC_PI_4);
        assert!(stokes_line_geometry(0.0).is_err());
    }

    #[test]
    fn real_point_after_crossing() {
        let g = stokes_line_geometry(1.0).unwrap();
        let p = Complex64::new(0.5, 0.0);
        assert!(!g.on_a_line(p, 1e-12));
        assert!(g.crossed(0.5));
        assert!(!g.crossed(-0.5));
        assert!(g.on_a_line(Complex64::new(0.0, 0.3), 1e-12));
    }

    #[test]
    fn stokes_condition_on_the_imaginary_axis() {
        let sigma = Complex64::new(0.0, FRAC_PI_2);
        assert!(is_stokes_direction(
            Complex64::new(0.0, -0.7) - sigma + sigma,
            1e-12
        ));
        assert!(!is_stokes_direction(Complex64::new(0.5, 0.0) - sigma, 1e-9));
    }

    #[test]
    fn ratio_test_early_rows_are_finite() {
        let rt = ratio_test(&table(8), 0.0).unwrap();
        let first = rt.rows.iter().find(|r| r.n == 1).unwrap();
        assert_eq!(first.measured, 6.0);
        assert!(first.predicted.is_finite());
        assert!(rt.gaps.is_empty());
    }
}
