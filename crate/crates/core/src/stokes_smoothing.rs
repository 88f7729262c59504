//! Smoothing of the Stokes line and the switched-on exponential.
//!
//! With the series truncated at `N = r/(2ε) + ρ` terms and `χ = x − σ = r e^{iθ}`,
//! the multiplier `S` of the remainder `R_N ∼ S e^{−i(x−σ)/ε}` obeys
//!
//! ```text
//! dS/dθ = Λ √(rπ) / (√2 ε^{β+1/2})
//!         · exp[ −(r/ε){1 − i e^{iθ} + iθ + iπ/2} + i{−2ρ(θ + π/2) − θ(β + 1)} ]
//! ```
//!
//! The braces vanish quadratically at `θ = −π/2`, so `S` changes only in a
//! layer of width `√ε` about the Stokes line, where it follows an error
//! function and jumps by `Λπ e^{3πi/2} / ε^β`.
//!
//! The constant in front comes from Stirling's formula for `Γ(2N + β + 2)`
//! with `2N` replaced by `r/ε`. That replacement costs a factor `1 + O(ε)`
//! which depends on ρ (about 0.83 at ε = 0.05, ρ = 0). [`Prefactor::ExactGamma`]
//! keeps the Gamma function exact instead; the θ-dependence is untouched and
//! the integrated jump then equals the closed form for every ρ.

use std::f64::consts::{FRAC_PI_2, PI};

use num::complex::Complex64;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::late_terms::BETA_EXPONENT;

/// Normalization of the multiplier equation's constant factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prefactor {
    /// The Stirling-approximated constant exactly as written above.
    Stirling,
    /// Stirling's approximation undone: `Γ(2N+β+2)` kept exact.
    ExactGamma,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesFrame {
    /// `|χ|`, the distance from the singularity.
    pub r: f64,
    /// Offset `N − r/(2ε)`.
    pub rho: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub beta_exponent: u32,
    pub prefactor: Prefactor,
}

impl StokesFrame {
    /// Frame with ρ taken from the optimal truncation `N = round(r/2ε)`.
    pub fn new(r: f64, epsilon: f64, lambda: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r must be positive, got {r}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        let n = optimal_truncation(r, epsilon);
        StokesFrame {
            r,
            rho: 0.0,
            epsilon,
            lambda,
            beta_exponent: BETA_EXPONENT,
            prefactor: Prefactor::ExactGamma,
        }
        .with_rho(n as f64 - r / (2.0 * epsilon))
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|rho| must be ≤ 1, got {rho}"
            )));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn with_prefactor(mut self, prefactor: Prefactor) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// `N = r/(2ε) + ρ`.
    pub fn truncation(&self) -> f64 {
        self.r / (2.0 * self.epsilon) + self.rho
    }

    /// `Γ(n) e^{z} / (√(2π) z^{n−1/2})` with `z = r/ε`, `n = 2N + β + 2`:
    /// the factor by which the Stirling constant underestimates the exact one.
    pub fn gamma_correction(&self) -> f64 {
        let z = self.r / self.epsilon;
        let n = z + 2.0 * self.rho + self.beta_exponent as f64 + 2.0;
        (ln_gamma(n) + z - 0.5 * (2.0 * PI).ln() - (n - 0.5) * z.ln()).exp()
    }

    /// Constant in front of the exponential, including the prefactor choice.
    pub fn amplitude(&self) -> f64 {
        let beta = self.beta_exponent as f64;
        let stirling =
            self.lambda * (self.r * PI).sqrt() / (2f64.sqrt() * self.epsilon.powf(beta + 0.5));
        match self.prefactor {
            Prefactor::Stirling => stirling,
            Prefactor::ExactGamma => stirling * self.gamma_correction(),
        }
    }
}

/// `round(r/2ε)`, at least 1.
pub fn optimal_truncation(r: f64, epsilon: f64) -> usize {
    (r / (2.0 * epsilon)).round().max(1.0) as usize
}

/// `i^k` without rounding.
fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `1 + iφ − e^{iφ}`, accurate for small φ.
fn stokes_exponent(phi: f64) -> Complex64 {
    let re = 2.0 * (0.5 * phi).sin().powi(2);
    let im = if phi.abs() < 0.1 {
        let p2 = phi * phi;
        phi * p2 / 6.0 * (1.0 - p2 / 20.0 * (1.0 - p2 / 42.0 * (1.0 - p2 / 72.0)))
    } else {
        phi - phi.sin()
    };
    Complex64::new(re, im)
}

/// `θ` must stay within half a turn of the Stokes line at `θ = −π/2`.
fn check_wedge(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > -1.5 * PI && theta < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::OutsideValidityWedge { theta })
    }
}

/// Right-hand side `dS/dθ` of the multiplier equation.
pub fn multiplier_rhs(frame: &StokesFrame, theta: f64) -> Result<Complex64> {
    check_wedge(theta)?;
    let phi = theta + FRAC_PI_2;
    let z = frame.r / frame.epsilon;
    let beta = frame.beta_exponent as f64;
    // e^{−iθ(β+1)} = i^{β+1} e^{−i(β+1)φ}
    let exponent =
        -z * stokes_exponent(phi) - Complex64::new(0.0, (2.0 * frame.rho + beta + 1.0) * phi);
    if exponent.re > 0.0 {
        return Err(Error::OutsideValidityWedge { theta });
    }
    Ok(frame.amplitude() * i_pow(frame.beta_exponent + 1) * exponent.exp())
}

/// `[S] = Λπ e^{πi(β+1)/2} / ε^β`.
pub fn stokes_jump_beta(epsilon: f64, lambda: f64, beta: u32) -> Complex64 {
    lambda * PI / epsilon.powi(beta as i32) * i_pow(beta + 1)
}

/// Jump across the Stokes line with β = 2: `Λπ e^{3πi/2} / ε²`.
pub fn stokes_jump(epsilon: f64, lambda: f64) -> Complex64 {
    stokes_jump_beta(epsilon, lambda, BETA_EXPONENT)
}

/// `∫_{−∞}^{t} e^{−s²/2} ds`.
fn gaussian_cdf_integral(t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        0.0
    } else if t == f64::INFINITY {
        (2.0 * PI).sqrt()
    } else {
        (FRAC_PI_2).sqrt() * erfc(-t / 2f64.sqrt())
    }
}

/// Leading-order smoothed multiplier at `θ = −π/2 + √ε η`, relative to the
/// pre-Stokes constant.
pub fn erf_profile(eta: f64, frame: &StokesFrame) -> Complex64 {
    let beta = frame.beta_exponent;
    let c = frame.lambda * PI.sqrt() / (2f64.sqrt() * frame.epsilon.powi(beta as i32));
    c * i_pow(beta + 1) * gaussian_cdf_integral(frame.r.sqrt() * eta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSample {
    pub theta: f64,
    /// `(θ + π/2)/√ε`
    pub eta: f64,
    pub s: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StokesProfile {
    pub samples: Vec<ProfileSample>,
    pub jump_numeric: Complex64,
    pub jump_closed_form: Complex64,
    /// Value of `S` before the Stokes line (no oscillation coming from −∞).
    pub pre_stokes_constant: Complex64,
}

impl StokesProfile {
    pub fn jump_ratio(&self) -> Complex64 {
        self.jump_numeric / self.jump_closed_form
    }

    /// `max |S(θ) − erf_profile(η)| / |[S]|` over the samples.
    pub fn max_deviation_from_erf(&self, frame: &StokesFrame) -> f64 {
        let scale = self.jump_closed_form.norm();
        self.samples
            .iter()
            .map(|p| (p.s - self.pre_stokes_constant - erf_profile(p.eta, frame)).norm() / scale)
            .fold(0.0, f64::max)
    }

    /// `S` at `θ`, linearly interpolated between samples.
    pub fn value_at(&self, theta: f64) -> Option<Complex64> {
        let i = self.samples.partition_point(|p| p.theta < theta);
        if i == 0 || i >= self.samples.len() {
            return self
                .samples
                .get(i.min(self.samples.len().saturating_sub(1)))
                .filter(|p| p.theta == theta)
                .map(|p| p.s);
        }
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let w = (theta - a.theta) / (b.theta - a.theta);
        Some(a.s * (1.0 - w) + b.s * w)
    }

    /// `eta,re_s,im_s,re_erf,im_erf` rows.
    pub fn to_csv(&self, frame: &StokesFrame) -> String {
        let mut out = String::from("eta,re_s,im_s,re_erf,im_erf\n");
        for p in &self.samples {
            let e = erf_profile(p.eta, frame);
            out.push_str(&format!(
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
                p.eta,
                p.s.re + 0.0,
                p.s.im + 0.0,
                e.re + 0.0,
                e.im + 0.0
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Tolerance relative to the size of the jump.
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-8,
            max_depth: 40,
        }
    }
}

struct Simpson<'a> {
    frame: &'a StokesFrame,
    max_depth: u32,
    worst: (f64, f64, f64),
    failed: bool,
}

impl Simpson<'_> {
    fn f(&self, theta: f64) -> Complex64 {
        // The span was checked against the wedge up front.
        multiplier_rhs(self.frame, theta).unwrap_or_default()
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.f(lm), self.f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        if depth >= self.max_depth {
            self.failed = true;
            if delta.norm() > self.worst.2 {
                self.worst = (a, b, delta.norm());
            }
            return left + right + delta / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }

    fn integrate(&mut self, a: f64, b: f64, tol: f64) -> Complex64 {
        let (fa, fm, fb) = (self.f(a), self.f(0.5 * (a + b)), self.f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.refine(a, b, fa, fm, fb, whole, tol, 0)
    }
}

/// Minimum number of output samples accepted by [`integrate_multiplier`].
pub const MIN_STEPS: usize = 1000;

/// Integrate the multiplier equation across `theta_span` starting from the
/// pre-Stokes constant 0, sampling `S` at `steps + 1` equally spaced angles.
pub fn integrate_multiplier(
    frame: &StokesFrame,
    theta_span: (f64, f64),
    steps: usize,
) -> Result<StokesProfile> {
    integrate_multiplier_with(frame, theta_span, steps, QuadratureOptions::default())
}

pub fn integrate_multiplier_with(
    frame: &StokesFrame,
    theta_span: (f64, f64),
    steps: usize,
    options: QuadratureOptions,
) -> Result<StokesProfile> {
    let (lo, hi) = theta_span;
    if !(lo < -FRAC_PI_2 && -FRAC_PI_2 < hi) {
        return Err(Error::InvalidParameter(format!(
            "theta span [{lo}, {hi}] must contain -π/2 strictly inside"
        )));
    }
    check_wedge(lo)?;
    check_wedge(hi)?;
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_STEPS} steps required, got {steps}"
        )));
    }
    let jump_closed_form = stokes_jump_beta(frame.epsilon, frame.lambda, frame.beta_exponent);
    // Size of the whole integral; zero only when Λ = 0.
    let reference = frame.amplitude().abs() * (2.0 * PI * frame.epsilon / frame.r).sqrt();
    let tol = options.rel_tol * reference.max(f64::MIN_POSITIVE) / steps as f64;

    let mut simpson = Simpson {
        frame,
        max_depth: options.max_depth,
        worst: (lo, hi, 0.0),
        failed: false,
    };
    let pre_stokes_constant = Complex64::new(0.0, 0.0);
    let sqrt_eps = frame.epsilon.sqrt();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut s = pre_stokes_constant;
    let width = (hi - lo) / steps as f64;
    for i in 0..=steps {
        let theta = if i == steps {
            hi
        } else {
            lo + i as f64 * width
        };
        if i > 0 {
            let prev = samples
                .last()
                .map(|p: &ProfileSample| p.theta)
                .unwrap_or(lo);
            s += simpson.integrate(prev, theta, tol);
        }
        samples.push(ProfileSample {
            theta,
            eta: (theta + FRAC_PI_2) / sqrt_eps,
            s,
        });
    }
    if simpson.failed {
        let (lo, hi, error) = simpson.worst;
        return Err(Error::QuadratureNonConvergence { lo, hi, error });
    }
    let jump_numeric = samples[samples.len() - 1].s - samples[0].s;
    Ok(StokesProfile {
        samples,
        jump_numeric,
        jump_closed_form,
        pre_stokes_constant,
    })
}

/// Amplitude of the real tail left behind by both Stokes lines:
/// `2|Λ|π ε^{−2} e^{−π/(2γε)}`.
pub fn tail_amplitude(epsilon: f64, gamma: f64, lambda: f64) -> f64 {
    2.0 * lambda.abs() * PI / (epsilon * epsilon) * (-PI / (2.0 * gamma * epsilon)).exp()
}

/// `u_exp = −(2Λπ/ε²) e^{−π/(2γε)} sin(x/ε)`.
pub fn exp_tail(x: f64, epsilon: f64, gamma: f64, lambda: f64) -> f64 {
    -2.0 * lambda * PI / (epsilon * epsilon)
        * (-PI / (2.0 * gamma * epsilon)).exp()
        * (x / epsilon).sin()
}

/// Contribution switched on across the upper Stokes line:
/// `Λπ e^{3πi/2} ε^{−2} e^{−i(x−σ)/ε}`, `σ = iπ/(2γ)`.
pub fn upper_switched_remainder(x: f64, epsilon: f64, gamma: f64, lambda: f64) -> Complex64 {
    let sigma = Complex64::new(0.0, FRAC_PI_2 / gamma);
    let phase = (-Complex64::i() * (Complex64::new(x, 0.0) - sigma) / epsilon).exp();
    stokes_jump(epsilon, lambda) * phase
}

/// Contribution from the lower Stokes line, computed from its own singularity
/// `−σ`: `Λπ e^{−3πi/2} ε^{−2} e^{i(x+σ)/ε}`.
pub fn lower_switched_remainder(x: f64, epsilon: f64, gamma: f64, lambda: f64) -> Complex64 {
    let sigma = Complex64::new(0.0, FRAC_PI_2 / gamma);
    let phase = (Complex64::i() * (Complex64::new(x, 0.0) + sigma) / epsilon).exp();
    lambda * PI / (epsilon * epsilon) * i_pow(1) * phase
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = -19.97;

    fn frame(eps: f64) -> StokesFrame {
        StokesFrame::new(FRAC_PI_2, eps, LAMBDA).unwrap()
    }

    #[test]
    fn frame_takes_rho_from_optimal_truncation() {
        let f = frame(0.05);
        assert_relative_eq!(f.truncation(), 16.0, epsilon = 1e-12);
        assert!(f.rho.abs() <= 0.5);
        assert!(f.with_rho(1.5).is_err());
        assert!(StokesFrame::new(0.0, 0.1, LAMBDA).is_err());
        assert!(StokesFrame::new(1.0, -0.1, LAMBDA).is_err());
    }

    #[test]
    fn rhs_peaks_on_the_stokes_line() {
        let f = frame(0.05).with_prefactor(Prefactor::Stirling);
        let peak = multiplier_rhs(&f, -FRAC_PI_2).unwrap();
        let expected = LAMBDA.abs() * (FRAC_PI_2 * PI).sqrt() / (2f64.sqrt() * 0.05f64.powf(2.5));
        assert_relative_eq!(peak.norm(), expected, max_relative = 1e-14);
        for d in [-0.5, 0.5] {
            let theta = -FRAC_PI_2 + d;
            let c = 1.0 + theta.sin();
            let off = multiplier_rhs(&f, theta).unwrap();
            let z = f.r / f.epsilon;
            assert_relative_eq!(
                off.norm() / peak.norm(),
                (-z * c).exp(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn rhs_vanishes_with_lambda() {
        let f = frame(0.05).with_lambda(0.0);
        for t in [-2.0, -FRAC_PI_2, -1.0] {
            assert_eq!(multiplier_rhs(&f, t).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rhs_rejects_points_outside_the_wedge() {
        assert!(matches!(
            multiplier_rhs(&frame(0.1), 2.0),
            Err(Error::OutsideValidityWedge { .. })
        ));
    }

    #[test]
    fn exact_gamma_is_a_constant_rescaling() {
        let f = frame(0.05);
        let s = f.with_prefactor(Prefactor::Stirling);
        for t in [-2.2, -1.7, -1.2] {
            let ratio = multiplier_rhs(&f, t).unwrap() / multiplier_rhs(&s, t).unwrap();
            assert_relative_eq!(ratio.re, f.gamma_correction(), max_relative = 1e-12);
            assert!(ratio.im.abs() < 1e-12);
        }
        assert!(f.gamma_correction() > 1.0);
    }

    #[test]
    fn jump_values() {
        let j = stokes_jump(0.1, LAMBDA);
        assert_eq!(j.re, 0.0);
        assert_relative_eq!(j.im, 6273.7605, max_relative = 1e-8);
        assert_eq!(stokes_jump(0.1, 0.0).norm(), 0.0);
        assert_relative_eq!(
            stokes_jump(0.05, LAMBDA).im / j.im,
            4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn erf_profile_limits() {
        let f = frame(0.05);
        let jump = stokes_jump(0.05, LAMBDA);
        assert_eq!(erf_profile(f64::NEG_INFINITY, &f).norm(), 0.0);
        let far = erf_profile(f64::INFINITY, &f);
        assert_relative_eq!(far.im, jump.im, max_relative = 1e-14);
        let mid = erf_profile(0.0, &f);
        assert_relative_eq!(mid.im, 0.5 * jump.im, max_relative = 1e-14);
        assert!(erf_profile(-40.0, &f).norm() < 1e-100);
    }

    #[test]
    fn integrated_jump_matches_closed_form() {
        let f = frame(0.05);
        let p = integrate_multiplier(&f, (-PI, 0.0), 1000).unwrap();
        let ratio = p.jump_ratio();
        assert_relative_eq!(ratio.re, 1.0, epsilon = 1e-6);
        assert!(ratio.im.abs() < 1e-6);
        // Half of the change happens before the line.
        let mid = p.value_at(-FRAC_PI_2).unwrap();
        let half = (mid - p.samples[0].s).im / p.jump_numeric.im;
        assert!((half - 0.5).abs() < f.epsilon.sqrt(), "{half}");
    }

    #[test]
    fn stirling_prefactor_undershoots_at_finite_epsilon() {
        // ∫ e^{z(e^{iφ}−1−iφ) − iaφ} dφ over a full turn is 2π e^{−z} z^{n−1}/Γ(n)
        // exactly, which fixes the Stirling jump to 1/gamma_correction.
        let f = frame(0.05).with_prefactor(Prefactor::Stirling);
        let p = integrate_multiplier(&f, (-PI, 0.0), 1000).unwrap();
        let expected = 1.0 / frame(0.05).gamma_correction();
        assert_relative_eq!(p.jump_ratio().re, expected, max_relative = 1e-6);
        assert!(expected < 0.9);
    }

    #[test]
    fn flat_profile_without_lambda() {
        let f = frame(0.05).with_lambda(0.0);
        let p = integrate_multiplier(&f, (-PI, 0.0), 1000).unwrap();
        assert!(p.samples.iter().all(|s| s.s.norm() == 0.0));
        assert_eq!(p.jump_numeric.norm(), 0.0);
    }

    #[test]
    fn integration_preconditions() {
        let f = frame(0.05);
        assert!(integrate_multiplier(&f, (-1.0, 0.0), 2000).is_err());
        assert!(integrate_multiplier(&f, (-PI, 0.0), 999).is_err());
        assert!(integrate_multiplier(&f, (-5.0, 0.0), 2000).is_err());
    }

    #[test]
    fn tail_values() {
        let eps = 0.1;
        let a = tail_amplitude(eps, 1.0, LAMBDA);
        assert_relative_eq!(a, 1.8918e-3, max_relative = 1e-3);
        assert_relative_eq!(
            exp_tail(PI * eps / 2.0, eps, 1.0, LAMBDA),
            a,
            max_relative = 1e-12
        );
        assert_eq!(exp_tail(0.0, eps, 1.0, LAMBDA), 0.0);
        assert_relative_eq!(
            tail_amplitude(0.05, 1.0, LAMBDA),
            1.13e-9,
            max_relative = 1e-2
        );
    }

    #[test]
    fn conjugate_halves_assemble_the_real_tail() {
        let (eps, g) = (0.1, 1.0);
        for x in [-1.3, 0.0, 0.2, 2.7] {
            let up = upper_switched_remainder(x, eps, g, LAMBDA);
            let down = lower_switched_remainder(x, eps, g, LAMBDA);
            let total = up + down;
            assert!(total.im.abs() <= 1e-12 * up.norm());
            assert_relative_eq!(
                total.re,
                exp_tail(x, eps, g, LAMBDA),
                max_relative = 1e-9,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn tail_has_period_two_pi_epsilon() {
        let eps = 0.08;
        for x in [0.1, 0.77, 3.0] {
            let a = exp_tail(x, eps, 1.0, LAMBDA);
            let b = exp_tail(x + 2.0 * PI * eps, eps, 1.0, LAMBDA);
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-18);
        }
    }
}
