// Late orders of the series: the factorial-over-power growth, the constant
// Λ in front of it, and the singulant read off from successive ratios.

use std::f64::consts::FRAC_PI_2;

use kdv5_lab::late_terms::{analyse, richardson_extrapolants};
use kdv5_lab::sech_series::{build_series, gamma_from_f64};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let table = build_series(30, gamma_from_f64(1.0)?)?;
    let report = analyse(&table, 3)?;

    for c in &report.beta_fit {
        println!("beta = {} drift = {:.4}", c.beta, c.drift);
    }
    println!("selected beta = {}", report.beta_exponent);

    for n in [0, 1, 2, 10, 20, 30] {
        println!("Lambda_{n:<2} = {:.6}", report.lambda_sequence[n]);
    }
    for e in &report.lambda_extrapolants {
        println!(
            "order {} -> {:.6} (± {:.1e})",
            e.order, e.estimate, e.error_bound
        );
    }
    let tail = richardson_extrapolants(&report.lambda_sequence, 3, 0)?;
    println!("last order-3 extrapolants: {:.6?}", &tail[tail.len() - 3..]);
    println!("Lambda ≈ {:.4}", report.lambda_final.estimate);

    let target = -FRAC_PI_2 * FRAC_PI_2;
    for n in [5, 15, 25] {
        let chi2 = report.ratio_table.chi_squared_at(n).unwrap_or(f64::NAN);
        println!(
            "n = {n:<2} chi^2 ≈ {chi2:.5} ({:+.2}%)",
            100.0 * (chi2 / target - 1.0)
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
