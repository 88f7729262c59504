use std::f64::consts::{FRAC_PI_2, PI};

use kdv5_lab::bvp::{boundary_residuals, measure_window};
use kdv5_lab::complex_eval::{eval_coefficient, partial_sum, EvalPoint};
use kdv5_lab::late_terms::{richardson_extrapolants, richardson_extrapolate};
use kdv5_lab::sech_series::{build_series, SechPolynomial};
use kdv5_lab::stokes_smoothing::{erf_profile, integrate_multiplier, StokesFrame};
use num::complex::Complex64;
use num::{BigInt, BigRational, One};
use proptest::prelude::*;

fn poly(coeffs: &[i32], gamma: i64) -> SechPolynomial {
    let g = BigRational::from_integer(BigInt::from(gamma));
    SechPolynomial::from_terms(
        g,
        coeffs
            .iter()
            .enumerate()
            .map(|(m, &a)| (m as u32 + 1, BigRational::from_integer(BigInt::from(a)))),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_derivative_matches_finite_differences(
        coeffs in prop::collection::vec(-50i32..50, 1..5),
        gamma in 1i64..3,
        x in -2.0f64..2.0,
    ) {
        let p = poly(&coeffs, gamma);
        let d2 = p.second_derivative();
        let h = 1e-3;
        let fd = (p.eval_f64(x + h) - 2.0 * p.eval_f64(x) + p.eval_f64(x - h)) / (h * h);
        let scale = coeffs.iter().map(|a| a.abs() as f64).sum::<f64>() * (gamma * gamma) as f64;
        prop_assert!((fd - d2.eval_f64(x)).abs() <= 1e-4 * scale.max(1.0));
    }

    #[test]
    fn complex_evaluation_agrees_on_the_real_line(
        coeffs in prop::collection::vec(-50i32..50, 1..6),
        x in -3.0f64..3.0,
    ) {
        let p = poly(&coeffs, 1);
        let z = eval_coefficient(&p, Complex64::new(x, 0.0)).unwrap();
        prop_assert!(z.im == 0.0);
        prop_assert!((z.re - p.eval_f64(x)).abs() <= 1e-12 * (1.0 + z.re.abs()) * coeffs.len() as f64 * 50.0);
    }

    #[test]
    fn partial_sums_are_conjugate_symmetric(
        re in -2.0f64..2.0,
        im in -1.2f64..1.2,
        eps in 0.02f64..0.3,
        n in 1usize..8,
    ) {
        let table = build_series(7, BigRational::one()).unwrap();
        let z = Complex64::new(re, im);
        let a = partial_sum(&table, EvalPoint::new(z, eps).unwrap(), n).unwrap().value;
        let b = partial_sum(&table, EvalPoint::new(z.conj(), eps).unwrap(), n).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn richardson_leaves_constants_alone(c in -100.0f64..100.0, len in 8usize..20, order in 1usize..4) {
        let seq = vec![c; len];
        let e = richardson_extrapolate(&seq, order).unwrap();
        prop_assert!((e.estimate - c).abs() <= 1e-9 * (1.0 + c.abs()));
        for v in richardson_extrapolants(&seq, order, 1).unwrap() {
            prop_assert!((v - c).abs() <= 1e-9 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn richardson_removes_matching_corrections(c in -10.0f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        // c + a/n + b/n² is reproduced exactly at order 2 (index from 1).
        let seq: Vec<f64> = (1..=12).map(|n| c + a / n as f64 + b / (n * n) as f64).collect();
        let e = richardson_extrapolate(&seq, 2).unwrap();
        prop_assert!((e.estimate - c).abs() <= 1e-9);
    }

    #[test]
    fn erf_profile_rises_monotonically(eps in 0.02f64..0.2, a in -5.0f64..5.0, d in 0.01f64..2.0) {
        let f = StokesFrame::new(FRAC_PI_2, eps, -19.97).unwrap();
        // Λ < 0 with the −i phase: the imaginary part increases.
        prop_assert!(erf_profile(a + d, &f).im >= erf_profile(a, &f).im);
    }

    #[test]
    fn window_measurement_recovers_a_pure_tone(amp in 1e-8f64..1.0, phase in 0.0f64..(2.0 * PI), eps in 0.05f64..0.2) {
        let h = eps / 40.0;
        let x: Vec<f64> = (0..=4000).map(|i| i as f64 * h).collect();
        let u: Vec<f64> = x.iter().map(|x| amp * (x / eps + phase).sin()).collect();
        let (a, w) = measure_window(&x, &u, x[4000] - 4.0 * PI * eps).unwrap();
        prop_assert!((a / amp - 1.0).abs() < 2e-3);
        prop_assert!((w / (2.0 * PI * eps) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn reflected_ends_have_no_odd_derivatives(u in prop::collection::vec(-1.0f64..1.0, 5..40), h in 0.001f64..0.1) {
        prop_assert_eq!(boundary_residuals(&u, h), [0.0; 4]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jump_is_independent_of_truncation_offset(rho in -1.0f64..1.0, eps in 0.02f64..0.1) {
        // Over (−π, 0) the neglected part of the circle is O(e^{−r/ε}).
        let f = StokesFrame::new(FRAC_PI_2, eps, -19.97).unwrap().with_rho(rho).unwrap();
        let p = integrate_multiplier(&f, (-PI, 0.0), 1000).unwrap();
        prop_assert!((p.jump_ratio() - 1.0).norm() < 1e-5);
    }
}
