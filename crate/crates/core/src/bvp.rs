//! Direct numerical solution of `ε²u'''' + u'' + 3u² − cu = 0`.
//!
//! The half-line `[0, L]` is discretized on `n + 1` uniform nodes with the
//! 5-point fourth difference and 3-point second difference. Both ends are
//! closed by even reflection, `u_{−k} = u_k` and `u_{n+k} = u_{n−k}`, which is
//! `u' = u''' = 0` at `x = 0` and at `x = L`. Newton's method then needs one
//! pentadiagonal solve per step.
//!
//! A symmetric wave with that closure carries a tail whose amplitude depends
//! on where `L` falls in the tail's phase, roughly `A_min / |sin(kL + φ)|`.
//! [`minimal_tail`] scans half a wavelength of `L` values and picks the member with
//! the smallest tail.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::late_terms::linear_regression;
use crate::stokes_smoothing::tail_amplitude;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Width of the leading-order wave; used for the predicted tail.
    pub gamma: f64,
    pub c_value: f64,
    pub half_length: f64,
    pub grid_spacing: f64,
    /// Bound on the scaled residual, see [`GridSolution::residual_norm`].
    pub newton_tol: f64,
    pub max_iters: usize,
}

/// `4γ² + 16γ⁴ε²`, the wave speed through first order.
pub fn default_c(epsilon: f64, gamma: f64) -> f64 {
    4.0 * gamma * gamma + 16.0 * gamma.powi(4) * epsilon * epsilon
}

/// Smallest half-length accepted: core decay plus ten tail wavelengths.
pub fn min_half_length(epsilon: f64) -> f64 {
    10.0 + 20.0 * PI * epsilon
}

/// Default half-length, two units beyond the minimum.
pub fn default_half_length(epsilon: f64) -> f64 {
    min_half_length(epsilon) + 2.0
}

impl SolverConfig {
    /// Defaults: `c = 4γ² + 16γ⁴ε²`, `L = 12 + 20πε`, `h = ε/20`.
    pub fn new(epsilon: f64, gamma: f64) -> Self {
        SolverConfig {
            epsilon,
            gamma,
            c_value: default_c(epsilon, gamma),
            half_length: default_half_length(epsilon),
            grid_spacing: epsilon / 20.0,
            newton_tol: 1e-12,
            max_iters: 50,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c_value = c;
        self
    }

    pub fn with_half_length(mut self, l: f64) -> Self {
        self.half_length = l;
        self
    }

    pub fn with_grid_spacing(mut self, h: f64) -> Self {
        self.grid_spacing = h;
        self
    }

    /// Number of grid intervals; the spacing actually used is `L / intervals`,
    /// never more than the requested one.
    pub fn intervals(&self) -> usize {
        (self.half_length / self.grid_spacing * (1.0 - 1e-12))
            .ceil()
            .max(0.0) as usize
    }

    pub fn effective_h(&self) -> f64 {
        self.half_length / self.intervals() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive(self.epsilon, "epsilon")?;
        positive(self.gamma, "gamma")?;
        positive(self.c_value, "c")?;
        positive(self.half_length, "domain length")?;
        positive(self.grid_spacing, "grid spacing")?;
        positive(self.newton_tol, "newton tolerance")?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        let h_max = self.epsilon / 10.0;
        if self.intervals() < 4 || self.effective_h() > h_max {
            return Err(Error::Resolution(format!(
                "grid spacing {} exceeds epsilon/10 = {h_max}",
                self.grid_spacing
            )));
        }
        let l_min = min_half_length(self.epsilon);
        if self.half_length < l_min {
            return Err(Error::Resolution(format!(
                "domain length {} is below 10 + 20πε = {l_min:.4}",
                self.half_length
            )));
        }
        Ok(())
    }

    /// Tail wavenumber of the discretized linear operator,
    /// `(2 − 2cos kh)/h² = (1 + √(1 + 4cε²)) / (2ε²)`.
    pub fn discrete_wavenumber(&self) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        let s = (1.0 + (1.0 + 4.0 * self.c_value * e2).sqrt()) / (2.0 * e2);
        let h = self.effective_h();
        (1.0 - 0.5 * s * h * h).acos() / h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    /// Final `max_i |F_i| / max_i D_i`, where `D_i` sums the magnitudes of the
    /// terms making up `F_i`. Unscaled residuals carry rounding of size
    /// `ε²/h⁴ · 1e-16` and cannot reach an absolute 1e-12 on fine grids.
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub update_history: Vec<f64>,
}

impl GridSolution {
    pub fn h(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn half_length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Value at node `i` of the evenly reflected grid function.
    fn reflected(&self, i: isize) -> f64 {
        self.u[reflect(i, self.u.len() - 1)]
    }

    /// Cubic interpolation of the even extension; `x` must lie in `[−L, L]`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        let l = self.half_length();
        if !(x.abs() <= l * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "x = {x} lies outside the computed domain [-{l}, {l}]"
            )));
        }
        let t = x.abs().min(l) / self.h();
        let i = (t.floor() as isize).min(self.u.len() as isize - 2);
        let f = t - i as f64;
        let (p0, p1, p2, p3) = (
            self.reflected(i - 1),
            self.reflected(i),
            self.reflected(i + 1),
            self.reflected(i + 2),
        );
        Ok(p1
            + 0.5
                * f
                * (p2 - p0
                    + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0))))
    }

    /// Largest `r_{k+1} / r_k²` over Newton steps whose residual is still
    /// above the rounding floor.
    pub fn quadratic_constant(&self) -> Option<f64> {
        self.residual_history
            .windows(2)
            .filter(|w| w[1] > 1e-13 && w[0] < 0.1)
            .map(|w| w[1] / (w[0] * w[0]))
            .reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u\n");
        for (x, u) in self.nodes.iter().zip(&self.u) {
            out.push_str(&format!("{x:.10e},{u:.16e}\n"));
        }
        out
    }

    /// Samples this solution on the grid of `config`, falling back to the
    /// sech² guess beyond its own domain.
    fn resample(&self, config: &SolverConfig) -> Vec<f64> {
        let guess = initial_guess(config);
        let l = self.half_length();
        grid(config)
            .iter()
            .zip(guess)
            .map(|(&x, g)| {
                if x <= l {
                    self.value_at(x).unwrap_or(g)
                } else {
                    g
                }
            })
            .collect()
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 { -i } else { i };
    (if j > n { 2 * n - j } else { j }) as usize
}

fn grid(config: &SolverConfig) -> Vec<f64> {
    let n = config.intervals();
    let h = config.effective_h();
    (0..=n).map(|i| i as f64 * h).collect()
}

/// `2γ² sech²(γx)` with `γ` read off `c = 4γ²`.
pub fn initial_guess(config: &SolverConfig) -> Vec<f64> {
    let g = 0.5 * config.c_value.sqrt();
    grid(config)
        .iter()
        .map(|&x| 2.0 * g * g / (g * x).cosh().powi(2))
        .collect()
}

const FOURTH: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];
const SECOND: [f64; 5] = [0.0, 1.0, -2.0, 1.0, 0.0];

/// Discrete residual `F_i` and the scale `D_i` of its terms.
fn residual_with_scale(config: &SolverConfig, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len() - 1;
    let h = config.effective_h();
    let a = config.epsilon * config.epsilon / h.powi(4);
    let b = 1.0 / (h * h);
    let c = config.c_value;
    let mut f = Vec::with_capacity(n + 1);
    let mut d = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (mut d4, mut d2, mut s4, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for (k, (w4, w2)) in FOURTH.iter().zip(SECOND).enumerate() {
            let v = u[reflect(i as isize + k as isize - 2, n)];
            d4 += w4 * v;
            d2 += w2 * v;
            s4 += (w4 * v).abs();
            s2 += (w2 * v).abs();
        }
        let ui = u[i];
        f.push(a * d4 + b * d2 + 3.0 * ui * ui - c * ui);
        d.push(a * s4 + b * s2 + 3.0 * ui * ui + c * ui.abs());
    }
    (f, d)
}

/// Discrete residual of the equation at every node.
pub fn residual(config: &SolverConfig, u: &[f64]) -> Vec<f64> {
    residual_with_scale(config, u).0
}

/// Scaled residual `max |F_i| / max D_i`.
pub fn scaled_residual(config: &SolverConfig, u: &[f64]) -> f64 {
    let (f, d) = residual_with_scale(config, u);
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(*v));
    if fmax == 0.0 {
        0.0
    } else {
        fmax / dmax
    }
}

fn jacobian(config: &SolverConfig, u: &[f64]) -> BandedMatrix {
    let n = u.len() - 1;
    let h = config.effective_h();
    let a = config.epsilon * config.epsilon / h.powi(4);
    let b = 1.0 / (h * h);
    let mut j = BandedMatrix::zeros(n + 1, 2, 2);
    for i in 0..=n {
        for (k, (w4, w2)) in FOURTH.iter().zip(SECOND).enumerate() {
            let col = reflect(i as isize + k as isize - 2, n);
            j.add(i, col, a * w4 + b * w2);
        }
        j.add(i, i, 6.0 * u[i] - config.c_value);
    }
    j
}

/// Newton iteration from `initial` (or the sech² guess).
///
/// Stops once the scaled residual is below `newton_tol` and the last update
/// is below `√newton_tol · max(1, |u|∞)`; the next update would then be at
/// rounding level.
pub fn solve(config: &SolverConfig, initial: Option<&GridSolution>) -> Result<GridSolution> {
    config.validate()?;
    let mut u = match initial {
        Some(s) => s.resample(config),
        None => initial_guess(config),
    };
    let update_tol = config.newton_tol.sqrt();
    let mut residual_history = Vec::new();
    let mut update_history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    loop {
        let (f, _) = residual_with_scale(config, &u);
        let res = scaled_residual(config, &u);
        residual_history.push(res);
        let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let last_update = update_history.last().copied().unwrap_or(f64::INFINITY);
        if !res.is_finite() || !last_update.is_finite() && iterations > 0 {
            return Err(Error::NonConvergence {
                iterations,
                last_update,
                residual: res,
            });
        }
        if res <= config.newton_tol && last_update <= update_tol * scale {
            break;
        }
        if iterations == config.max_iters {
            return Err(Error::NonConvergence {
                iterations,
                last_update,
                residual: res,
            });
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let du = jacobian(config, &u).solve(&rhs)?;
        let mut step = 0.0f64;
        for (ui, d) in u.iter_mut().zip(&du) {
            *ui += d;
            step = step.max(d.abs());
        }
        update_history.push(step);
        iterations += 1;
    }
    Ok(GridSolution {
        nodes: grid(config),
        u,
        residual_norm: *residual_history.last().unwrap_or(&0.0),
        iterations,
        residual_history,
        update_history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    First,
    Third,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryConstraint {
    pub at: f64,
    pub derivative: Derivative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryConditions {
    /// `u'(0) = u'''(0) = u'(L) = u'''(L) = 0`.
    pub constraints: [BoundaryConstraint; 4],
    /// Ghost nodes `u_{−k} = u_k` and `u_{n+k} = u_{n−k}`, `k = 1, 2`.
    pub ghost_depth: usize,
}

pub fn boundary_conditions(config: &SolverConfig) -> BoundaryConditions {
    let c = |at, derivative| BoundaryConstraint { at, derivative };
    let l = config.half_length;
    BoundaryConditions {
        constraints: [
            c(0.0, Derivative::First),
            c(0.0, Derivative::Third),
            c(l, Derivative::First),
            c(l, Derivative::Third),
        ],
        ghost_depth: 2,
    }
}

/// Centered `u'` and `u'''` at both ends on the reflected grid, in the order
/// of [`BoundaryConditions::constraints`].
pub fn boundary_residuals(u: &[f64], h: f64) -> [f64; 4] {
    let n = u.len() - 1;
    let at = |i: isize| u[reflect(i, n)];
    let d1 = |i: isize| (at(i + 1) - at(i - 1)) / (2.0 * h);
    let d3 =
        |i: isize| ((at(i + 2) - at(i - 2)) - 2.0 * (at(i + 1) - at(i - 1))) / (2.0 * h.powi(3));
    let n = n as isize;
    [d1(0), d3(0), d1(n), d3(n)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailMeasurement {
    pub epsilon: f64,
    pub amplitude_measured: f64,
    /// `|Λ|π ε^{−2} e^{−π/(2γε)}`: half the one-sided tail, one half per side.
    pub amplitude_predicted: f64,
    pub wavelength_measured: f64,
    pub half_length: f64,
    pub grid_spacing: f64,
}

impl TailMeasurement {
    pub fn ratio(&self) -> f64 {
        self.amplitude_measured / self.amplitude_predicted
    }
}

/// Tail amplitude expected on each side of a symmetric wave.
pub fn symmetric_tail_amplitude(epsilon: f64, gamma: f64, lambda: f64) -> f64 {
    0.5 * tail_amplitude(epsilon, gamma, lambda)
}

/// Peak `|u|` and wavelength over the nodes with `x ≥ lo`.
///
/// The peak is refined by a parabola through the largest sample and its
/// neighbours; the wavelength is twice the mean spacing of zero crossings.
pub fn measure_window(x: &[f64], u: &[f64], lo: f64) -> Result<(f64, f64)> {
    let n = u.len() - 1;
    let start = x.partition_point(|&v| v < lo);
    if start >= n {
        return Err(Error::InsufficientData("window holds no grid nodes".into()));
    }
    let (i, _) = (start..=n)
        .map(|i| (i, u[i].abs()))
        .fold(
            (start, -1.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    let s = u[i].signum();
    let at = |k: isize| s * u[reflect(k, n)];
    let (m, c, p) = (at(i as isize - 1), at(i as isize), at(i as isize + 1));
    let curv = m - 2.0 * c + p;
    let amplitude = if curv < 0.0 {
        c - (p - m).powi(2) / (8.0 * curv)
    } else {
        c
    };

    let mut crossings = Vec::new();
    for k in start..n {
        let (a, b) = (u[k], u[k + 1]);
        if a == 0.0 {
            crossings.push(x[k]);
        } else if a * b < 0.0 {
            crossings.push(x[k] + (x[k + 1] - x[k]) * a / (a - b));
        }
    }
    let wavelength = if crossings.len() >= 2 {
        2.0 * (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
    } else {
        f64::NAN
    };
    Ok((amplitude, wavelength))
}

/// Checks that the sech² core has decayed to under a tenth of the predicted
/// tail at `L − 4πε`; returns the predicted tail.
pub fn check_window(config: &SolverConfig, lambda: f64) -> Result<f64> {
    let g = config.gamma;
    let predicted = symmetric_tail_amplitude(config.epsilon, g, lambda);
    let lo = config.half_length - 4.0 * PI * config.epsilon;
    let core = 2.0 * g * g / (g * lo).cosh().powi(2);
    if core >= 0.1 * predicted {
        return Err(Error::WindowContaminated { core, predicted });
    }
    Ok(predicted)
}

/// Tail amplitude and wavelength over the last two wavelengths before `L`.
pub fn measure_tail(
    sol: &GridSolution,
    config: &SolverConfig,
    lambda: f64,
) -> Result<TailMeasurement> {
    let eps = config.epsilon;
    let l = sol.half_length();
    let lo = l - 4.0 * PI * eps;
    let predicted = check_window(&config.with_half_length(l), lambda)?;
    let (amplitude, wavelength) = measure_window(&sol.nodes, &sol.u, lo)?;
    Ok(TailMeasurement {
        epsilon: eps,
        amplitude_measured: amplitude,
        amplitude_predicted: predicted,
        wavelength_measured: wavelength,
        half_length: l,
        grid_spacing: sol.h(),
    })
}

/// Half-lengths tried when locating the smallest tail.
pub const SCAN_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalTail {
    pub config: SolverConfig,
    pub solution: GridSolution,
    pub measurement: TailMeasurement,
    /// `(L, amplitude)` for every scanned half-length.
    pub scan: Vec<(f64, f64)>,
    /// Smallest amplitude of the fitted `A_min / |sin(kL + φ)|` curve.
    pub fitted_minimum: f64,
}

/// Solve over half a tail wavelength of half-lengths starting at
/// `config.half_length`, fit `1/A² = a + b cos 2kL + c sin 2kL`, and re-solve
/// at the half-length of least tail. The grid spacing shrinks slightly so that
/// each half-length is a whole number of intervals: the core height moves
/// linearly with `L` even at the minimum, so `L` is not rounded to the grid.
pub fn minimal_tail(
    config: &SolverConfig,
    lambda: f64,
    initial: Option<&GridSolution>,
) -> Result<MinimalTail> {
    config.validate()?;
    let l0 = config.half_length;
    let k = config.discrete_wavenumber();
    let period = PI / k;

    let mut scan = Vec::with_capacity(SCAN_POINTS);
    let mut rows = Vec::with_capacity(SCAN_POINTS);
    let mut guess = initial.cloned();
    for j in 0..SCAN_POINTS {
        let cfg = config.with_half_length(l0 + j as f64 * period / SCAN_POINTS as f64);
        let sol = solve(&cfg, guess.as_ref())?;
        let m = measure_tail(&sol, &cfg, lambda)?;
        let l = cfg.half_length;
        scan.push((l, m.amplitude_measured));
        rows.push([
            1.0,
            (2.0 * k * l).cos(),
            (2.0 * k * l).sin(),
            m.amplitude_measured.powi(-2),
        ]);
        guess = Some(sol);
    }
    let [a, b, c] = least_squares_3(&rows)?;
    let phase = c.atan2(b);
    let best = l0 + (phase / (2.0 * k) - l0).rem_euclid(period);
    let cfg = config.with_half_length(best);
    let solution = solve(&cfg, guess.as_ref())?;
    let measurement = measure_tail(&solution, &cfg, lambda)?;
    let top = a + b.hypot(c);
    let fitted_minimum = if top > 0.0 {
        top.sqrt().recip()
    } else {
        f64::NAN
    };
    Ok(MinimalTail {
        config: cfg,
        solution,
        measurement,
        scan,
        fitted_minimum,
    })
}

/// Normal equations for three unknowns; rows are `[x0, x1, x2, y]`.
fn least_squares_3(rows: &[[f64; 4]]) -> Result<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            m[i][3] += r[i] * r[3];
        }
    }
    for col in 0..3 {
        let p = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        m.swap(col, p);
        if m[col][col].abs() < 1e-12 * m[0][0].abs().max(1e-300) {
            return Err(Error::IllConditioned("tail phase fit is degenerate".into()));
        }
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    Ok(x)
}

/// Change in the measured tail when the grid spacing is halved at fixed `L`.
pub fn discretization_error(tail: &MinimalTail, lambda: f64) -> Result<f64> {
    let fine = tail
        .config
        .with_grid_spacing(0.5 * tail.config.effective_h());
    let sol = solve(&fine, Some(&tail.solution))?;
    let m = measure_tail(&sol, &fine, lambda)?;
    Ok((m.amplitude_measured - tail.measurement.amplitude_measured).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

/// Least-squares line through `ln(A ε²)` against `1/ε`; the expected slope is
/// `−π/(2γ)`.
pub fn fit_exponent(measurements: &[TailMeasurement]) -> Result<ExponentFit> {
    if measurements.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs at least 4 measurements, got {}",
            measurements.len()
        )));
    }
    if let Some(m) = measurements.iter().find(|m| !(m.amplitude_measured > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "non-positive amplitude at epsilon = {}",
            m.epsilon
        )));
    }
    let pts: Vec<(f64, f64)> = measurements
        .iter()
        .map(|m| {
            (
                1.0 / m.epsilon,
                (m.amplitude_measured * m.epsilon * m.epsilon).ln(),
            )
        })
        .collect();
    let (slope, log_prefactor, r_squared) = linear_regression(&pts);
    if r_squared < 0.99 {
        return Err(Error::PoorFit { r_squared });
    }
    Ok(ExponentFit {
        slope,
        log_prefactor,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Largest ε first, each solve seeded by the previous one. Sequential.
    Continuation,
    /// Every ε from the sech² guess, in parallel.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub gamma: f64,
    pub lambda: f64,
    /// Starting half-length; defaults per ε to `12 + 20πε`.
    pub half_length: Option<f64>,
    /// Grid spacing; defaults per ε to `ε/20`.
    pub grid_h: Option<f64>,
    pub mode: SweepMode,
    pub estimate_discretization: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            gamma: 1.0,
            lambda: crate::DEFAULT_LAMBDA,
            half_length: None,
            grid_h: None,
            mode: SweepMode::Continuation,
            estimate_discretization: true,
        }
    }
}

impl SweepOptions {
    pub fn config(&self, epsilon: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(epsilon, self.gamma);
        if let Some(l) = self.half_length {
            cfg = cfg.with_half_length(l);
        }
        if let Some(h) = self.grid_h {
            cfg = cfg.with_grid_spacing(h);
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(flatten)]
    pub measurement: TailMeasurement,
    pub discretization_error: Option<f64>,
    pub newton_iterations: usize,
    pub u_at_origin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub record: SweepRecord,
    pub solution: GridSolution,
}

fn sweep_one(
    eps: f64,
    options: &SweepOptions,
    guess: Option<&GridSolution>,
) -> Result<SweepResult> {
    let tail = minimal_tail(&options.config(eps), options.lambda, guess)?;
    let discretization_error = if options.estimate_discretization {
        Some(discretization_error(&tail, options.lambda)?)
    } else {
        None
    };
    let record = SweepRecord {
        measurement: tail.measurement,
        discretization_error,
        newton_iterations: tail.solution.iterations,
        u_at_origin: tail.solution.u[0],
    };
    Ok(SweepResult {
        record,
        solution: tail.solution,
    })
}

/// Minimal-tail measurements for each ε, returned in input order.
pub fn tail_sweep(epsilons: &[f64], options: &SweepOptions) -> Result<Vec<SweepResult>> {
    for &e in epsilons {
        let cfg = options.config(e);
        cfg.validate()?;
        check_window(&cfg, options.lambda)?;
    }
    match options.mode {
        SweepMode::Independent => epsilons
            .par_iter()
            .map(|&e| sweep_one(e, options, None))
            .collect(),
        SweepMode::Continuation => {
            let mut order: Vec<usize> = (0..epsilons.len()).collect();
            order.sort_by(|&a, &b| epsilons[b].total_cmp(&epsilons[a]));
            let mut out: Vec<Option<SweepResult>> = vec![None; epsilons.len()];
            let mut guess: Option<GridSolution> = None;
            for i in order {
                let res = sweep_one(epsilons[i], options, guess.as_ref())?;
                guess = Some(res.solution.clone());
                out[i] = Some(res);
            }
            Ok(out.into_iter().flatten().collect())
        }
    }
}

/// One JSON object per line.
pub fn to_json_lines<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}
