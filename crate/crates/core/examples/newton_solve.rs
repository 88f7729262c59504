// One solve of the full equation: Newton history, boundary closure, and
// second-order convergence of the core height.

use kdv5_lab::bvp::{boundary_residuals, solve, SolverConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::new(0.1, 1.0);
    let sol = solve(&cfg, None)?;
    println!("{} Newton steps, scaled residuals:", sol.iterations);
    for (k, r) in sol.residual_history.iter().enumerate() {
        println!("  {k}: {r:.3e}");
    }
    println!(
        "r_(k+1) / r_k^2 <= {:.3e}",
        sol.quadratic_constant().unwrap_or(f64::NAN)
    );
    println!(
        "boundary residuals {:?}",
        boundary_residuals(&sol.u, sol.h())
    );

    let base = SolverConfig::new(0.05, 1.0);
    let heights: Vec<f64> = [0.004, 0.002, 0.001]
        .iter()
        .map(|&h| solve(&base.with_grid_spacing(h), None).map(|s| s.u[0]))
        .collect::<Result<_, _>>()?;
    println!("u(0) at h = 0.004, 0.002, 0.001: {heights:.8?}");
    println!(
        "refinement ratio {:.3}",
        (heights[0] - heights[1]) / (heights[1] - heights[2])
    );

    if let Err(e) = solve(&cfg.with_grid_spacing(0.1), None) {
        println!("too coarse: {e}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
