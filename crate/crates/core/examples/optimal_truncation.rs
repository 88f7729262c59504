// The series is divergent: its terms shrink until `n ≈ |x − σ|/2ε` and grow
// after that. Partial sums are evaluated exactly, since they cancel badly.

use kdv5_lab::complex_eval::{optimal_n, partial_sum, EvalPoint};
use kdv5_lab::sech_series::{build_series, gamma_from_f64};
use num::complex::Complex64;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let table = build_series(20, gamma_from_f64(1.0)?)?;
    let eps = 0.1;

    let sum = partial_sum(&table, EvalPoint::real(0.0, eps)?, 21)?;
    for (n, m) in sum.term_magnitudes.iter().enumerate() {
        println!(
            "n = {n:<2} |term| = {m:.3e}  partial = {:.9}",
            sum.prefix(n + 1).re
        );
    }
    println!(
        "smallest term at n = {}, rule gives N = {}",
        sum.least_term_index().unwrap_or(0),
        optimal_n(Complex64::new(0.0, 0.0), eps, 1.0)
    );

    // Closer to the singularity at iπ/2 the divergence sets in earlier.
    let x = Complex64::new(0.3, 1.0);
    let near = partial_sum(&table, EvalPoint::new(x, eps)?, 21)?;
    println!(
        "x = {x}: N = {} least term at {}",
        optimal_n(x, eps, 1.0),
        near.least_term_index().unwrap_or(0)
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
