//! Evaluation of series coefficients and truncated partial sums at complex `x`.
//!
//! Late coefficients alternate in sign with magnitudes near `Γ(2n+2)`, so a
//! double-precision Horner sum loses almost every digit by `n ≈ 30`. Instead
//! `S = sech²(γx)` is rounded once to a pair of dyadic rationals and the
//! polynomial is summed exactly over big integers; only the final value is
//! rounded back to `f64`.

use std::f64::consts::FRAC_PI_2;

use num::complex::Complex64;
use num::integer::Integer;
use num::{BigInt, BigRational, Float, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sech_series::{SechPolynomial, SeriesTable};

/// Default bound on `|cosh(γx)|` below which a point counts as a pole.
pub const DEFAULT_POLE_THRESHOLD: f64 = 1e-8;

/// A complex abscissa together with the small parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalPoint {
    pub x: Complex64,
    pub epsilon: f64,
}

impl EvalPoint {
    pub fn new(x: Complex64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite x = {x}")));
        }
        Ok(EvalPoint { x, epsilon })
    }

    pub fn real(x: f64, epsilon: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0), epsilon)
    }
}

/// `Σ_{n<N} ε^{2n} u_n(x)` with the individual terms kept for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSum {
    pub value: Complex64,
    pub n_terms: usize,
    pub terms: Vec<Complex64>,
    pub term_magnitudes: Vec<f64>,
}

impl PartialSum {
    /// Sum of the first `k ≤ n_terms` terms.
    pub fn prefix(&self, k: usize) -> Complex64 {
        self.terms[..k].iter().sum()
    }

    /// Index of the smallest term, i.e. the number of terms kept when the
    /// series is truncated just before its least term. `None` when empty.
    pub fn least_term_index(&self) -> Option<usize> {
        self.term_magnitudes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Evaluator {
    pub pole_threshold: f64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator {
            pole_threshold: DEFAULT_POLE_THRESHOLD,
        }
    }
}

impl Evaluator {
    pub fn with_pole_threshold(pole_threshold: f64) -> Self {
        Evaluator { pole_threshold }
    }

    /// `S = sech²(γx)`, rejecting points within the pole threshold.
    pub fn sech_squared(&self, gamma: f64, x: Complex64) -> Result<Complex64> {
        let mut z = x * gamma;
        if z.re < 0.0 {
            z = -z;
        }
        // S = 4w / (1 + w)² with w = e^{−2z}, |w| ≤ 1.
        let w = (-2.0 * z).exp();
        let one_plus_w = Complex64::one() + w;
        let cosh_modulus = (z.re.exp() * one_plus_w.norm()) / 2.0;
        if cosh_modulus < self.pole_threshold {
            return Err(Error::PoleProximity { x, cosh_modulus });
        }
        Ok(4.0 * w / (one_plus_w * one_plus_w))
    }

    pub fn eval_coefficient(&self, p: &SechPolynomial, x: Complex64) -> Result<Complex64> {
        let gamma = p.gamma().to_f64().unwrap_or(f64::NAN);
        let s = self.sech_squared(gamma, x)?;
        Ok(eval_exact(p, s, 1.0))
    }

    pub fn partial_sum(
        &self,
        table: &SeriesTable,
        point: EvalPoint,
        n_terms: usize,
    ) -> Result<PartialSum> {
        if n_terms > table.len() {
            return Err(Error::InvalidParameter(format!(
                "N = {n_terms} exceeds the {} available coefficients",
                table.len()
            )));
        }
        let s = self.sech_squared(table.gamma_f64(), point.x)?;
        let eps2 = point.epsilon * point.epsilon;
        let mut terms = Vec::with_capacity(n_terms);
        let mut weight = 1.0;
        let mut exact_weight = BigRational::one();
        let eps2_exact = BigRational::from_float(eps2)
            .ok_or_else(|| Error::InvalidParameter("epsilon".into()))?;
        for n in 0..n_terms {
            // ε^{2n} is formed exactly so late terms never overflow on the way.
            let term = if weight > 1e-250 && n < 60 {
                eval_exact(table.u(n), s, weight)
            } else {
                eval_exact_weighted(table.u(n), s, &exact_weight)
            };
            terms.push(term);
            weight *= eps2;
            exact_weight *= &eps2_exact;
        }
        let term_magnitudes = terms.iter().map(|t| t.norm()).collect();
        Ok(PartialSum {
            value: terms.iter().sum(),
            n_terms,
            terms,
            term_magnitudes,
        })
    }
}

/// `u(x)` for one coefficient, default pole threshold.
pub fn eval_coefficient(p: &SechPolynomial, x: Complex64) -> Result<Complex64> {
    Evaluator::default().eval_coefficient(p, x)
}

/// Partial sum with the default pole threshold.
pub fn partial_sum(table: &SeriesTable, point: EvalPoint, n_terms: usize) -> Result<PartialSum> {
    Evaluator::default().partial_sum(table, point, n_terms)
}

/// Optimal truncation index `N = round(r / 2ε)`, `r` the distance from `x` to
/// the nearer of the singularities `±iπ/(2γ)`. Never less than 1.
pub fn optimal_n(x: Complex64, epsilon: f64, gamma: f64) -> usize {
    let r = singularity_distance(x, gamma);
    (r / (2.0 * epsilon)).round().max(1.0) as usize
}

/// `|x − σ|` for the nearer of `σ = ±iπ/(2γ)`.
pub fn singularity_distance(x: Complex64, gamma: f64) -> f64 {
    let sigma = Complex64::new(0.0, FRAC_PI_2 / gamma);
    (x - sigma).norm().min((x + sigma).norm())
}

fn dyadic(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let (mantissa, exponent, sign) = Float::integer_decode(v);
    (BigInt::from(mantissa) * BigInt::from(sign), exponent as i64)
}

/// `weight · p(s)` summed exactly at the dyadic values of `s` and `weight`.
fn eval_exact(p: &SechPolynomial, s: Complex64, weight: f64) -> Complex64 {
    let (wm, we) = dyadic(weight);
    eval_core(p, s, &BigRational::from_integer(wm), we)
}

fn eval_exact_weighted(p: &SechPolynomial, s: Complex64, weight: &BigRational) -> Complex64 {
    eval_core(p, s, weight, 0)
}

fn eval_core(p: &SechPolynomial, s: Complex64, weight: &BigRational, weight_exp: i64) -> Complex64 {
    if p.is_zero() || weight.is_zero() {
        return Complex64::zero();
    }
    let (mut a, ea) = dyadic(s.re);
    let (mut b, eb) = dyadic(s.im);
    let e = match (a.is_zero(), b.is_zero()) {
        (true, true) => return Complex64::zero(),
        (false, true) => ea,
        (true, false) => eb,
        (false, false) => ea.min(eb),
    };
    if !a.is_zero() {
        a <<= (ea - e) as usize;
    }
    if !b.is_zero() {
        b <<= (eb - e) as usize;
    }
    let t = if e >= 0 {
        a <<= e as usize;
        b <<= e as usize;
        0usize
    } else {
        (-e) as usize
    };

    let degree = p.degree() as usize;
    let denom = p
        .terms()
        .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
    let numer = |m: usize| -> BigInt {
        let c = p.coeff(m as u32);
        c.numer() * (&denom / c.denom())
    };

    // Horner on the scaled polynomial Σ N_m (a + ib)^m 2^{t(d−m)}.
    let mut re = numer(degree);
    let mut im = BigInt::zero();
    for m in (0..degree).rev() {
        let next_re = &re * &a - &im * &b;
        let next_im = &re * &b + &im * &a;
        re = next_re;
        im = next_im;
        let n_m = numer(m);
        if !n_m.is_zero() {
            re += n_m << (t * (degree - m));
        }
    }

    let num_scale = weight.numer();
    let den = &denom * weight.denom();
    let shift = weight_exp - (t * degree) as i64;
    Complex64::new(
        ratio_to_f64(&re * num_scale, &den, shift),
        ratio_to_f64(&im * num_scale, &den, shift),
    )
}

/// `num / den · 2^shift`, correctly rounded by the rational conversion.
fn ratio_to_f64(num: BigInt, den: &BigInt, shift: i64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let (n, d) = if shift >= 0 {
        (num << shift as usize, den.clone())
    } else {
        (num, den << (-shift) as usize)
    };
    let (n, d) = if d.is_negative() { (-n, -d) } else { (n, d) };
    BigRational::new_raw(n, d).to_f64().unwrap_or(f64::NAN)
}
