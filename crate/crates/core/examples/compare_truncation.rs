// How close does the best truncated series get to the true wave?

use kdv5_lab::harness::{compare_truncation, CompareArgs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cmp = compare_truncation(0.1, 0.0, &CompareArgs::default())?;
    println!(
        "grid u(0) = {:.9} (± {:.1e}, L = {:.3})",
        cmp.reference, cmp.reference_uncertainty, cmp.half_length
    );
    for r in &cmp.rows {
        let mark = if r.n_terms == cmp.optimal_n {
            " <- N"
        } else {
            ""
        };
        println!(
            "{:>2} terms: {:.9}  error {:.3e}{mark}",
            r.n_terms, r.partial_sum, r.error
        );
    }
    println!(
        "best N = {}, least term at {}, error/tail = {:.3}",
        cmp.best_n(),
        cmp.least_term_index,
        cmp.error_at(cmp.optimal_n).unwrap_or(f64::NAN) / cmp.amplitude_scale
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
