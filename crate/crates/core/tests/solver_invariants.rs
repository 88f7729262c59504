use std::f64::consts::PI;

use kdv5_lab::bvp::{measure_tail, minimal_tail, residual, solve, SolverConfig};
use kdv5_lab::DEFAULT_LAMBDA;

#[test]
fn converged_residual_is_within_tolerance_everywhere() {
    let cfg = SolverConfig::new(0.08, 1.0);
    let sol = solve(&cfg, None).unwrap();
    assert!(sol.residual_norm <= cfg.newton_tol);
    let r = residual(&cfg, &sol.u);
    // Unscaled, the residual is rounding in the ε²/h⁴ stencil.
    let a = cfg.epsilon.powi(2) / cfg.effective_h().powi(4);
    assert!(r.iter().all(|v| v.abs() <= 1e-12 * a));
}

#[test]
fn newton_is_quadratic_at_the_end() {
    let sol = solve(&SolverConfig::new(0.12, 1.0), None).unwrap();
    let c = sol
        .quadratic_constant()
        .expect("at least one step above the floor");
    let h = &sol.residual_history;
    // Decreasing until the rounding floor near 1e-16.
    assert!(
        h.windows(2).filter(|w| w[0] > 1e-14).all(|w| w[1] < w[0]),
        "{h:?}"
    );
    assert!(c < 1e12, "C = {c}");
}

#[test]
fn coarse_guess_for_a_tenth_needs_few_steps() {
    let sol = solve(&SolverConfig::new(0.1, 1.0).with_c(4.0), None).unwrap();
    assert!(sol.iterations <= 10);
    assert!(sol.u[0] > 1.0);
}

#[test]
fn unit_speed_height() {
    // With c = 4 the core sits below the default-speed wave, whose height is
    // 2 + 10ε² + O(ε⁴).
    let base = SolverConfig::new(0.05, 1.0).with_grid_spacing(0.004);
    let fixed = solve(&base.with_c(4.0), None).unwrap().u[0];
    let default = solve(&base, None).unwrap().u[0];
    assert!((default - 2.025).abs() < 0.002, "{default}");
    assert!(fixed < default && (fixed - 2.0).abs() < 0.01, "{fixed}");
}

#[test]
fn tail_wavelength_approaches_two_pi_epsilon() {
    let cfg = SolverConfig::new(0.08, 1.0);
    let sol = solve(&cfg, None).unwrap();
    let m = measure_tail(&sol, &cfg, DEFAULT_LAMBDA).unwrap();
    assert!((m.wavelength_measured / (2.0 * PI * 0.08) - 1.0).abs() < 0.05);
}

#[test]
fn tail_decays_faster_than_any_power() {
    for eps in [0.15, 0.12] {
        let big = minimal_tail(&SolverConfig::new(eps, 1.0), DEFAULT_LAMBDA, None).unwrap();
        let small = minimal_tail(&SolverConfig::new(eps / 2.0, 1.0), DEFAULT_LAMBDA, None).unwrap();
        let q = small.measurement.amplitude_measured / big.measurement.amplitude_measured;
        assert!(q > 0.0 && q < 0.5f64.powi(4), "eps {eps}: ratio {q}");
    }
}

#[test]
fn even_extension_is_exact() {
    let sol = solve(&SolverConfig::new(0.1, 1.0), None).unwrap();
    for x in [0.013, 0.5, 3.3] {
        assert_eq!(sol.value_at(x).unwrap(), sol.value_at(-x).unwrap());
    }
}
