// Switching on the exponential across the Stokes line `θ = −π/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use kdv5_lab::stokes_smoothing::{integrate_multiplier, Prefactor, StokesFrame};
use kdv5_lab::DEFAULT_LAMBDA;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let span = (-PI, 0.0);
    for eps in [0.1, 0.05, 0.025] {
        let frame = StokesFrame::new(FRAC_PI_2, eps, DEFAULT_LAMBDA)?;
        let p = integrate_multiplier(&frame, span, 2000)?;
        println!(
            "eps = {eps:<6} N = {:.0} jump = {:.2} (closed {:.2}) ratio = {:.8} erf deviation = {:.3}",
            frame.truncation(),
            p.jump_numeric.im,
            p.jump_closed_form.im,
            p.jump_ratio().re,
            p.max_deviation_from_erf(&frame)
        );
    }

    // The Stirling form of the constant loses a ρ-dependent O(ε) factor.
    let base = StokesFrame::new(FRAC_PI_2, 0.05, DEFAULT_LAMBDA)?;
    for rho in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let exact = integrate_multiplier(&base.with_rho(rho)?, span, 1000)?;
        let stirling = integrate_multiplier(
            &base.with_rho(rho)?.with_prefactor(Prefactor::Stirling),
            span,
            1000,
        )?;
        println!(
            "rho = {rho:+.1}: exact-Gamma ratio {:.6}, Stirling ratio {:.4}",
            exact.jump_ratio().re,
            stirling.jump_ratio().re
        );
    }

    let p = integrate_multiplier(&base, (-FRAC_PI_2 - 0.6, -FRAC_PI_2 + 0.6), 1000)?;
    let csv = p.to_csv(&base);
    println!("{}", csv.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
