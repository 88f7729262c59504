//! Reproducible experiment runs: each command validates its inputs, computes,
//! writes its artifacts atomically and returns a [`RunManifest`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bvp::{
    self, fit_exponent, minimal_tail, solve, to_json_lines, ExponentFit, SolverConfig, SweepMode,
    SweepOptions,
};
use crate::complex_eval::{optimal_n, partial_sum, EvalPoint};
use crate::error::{Error, Result};
use crate::late_terms::{analyse, MIN_DEPTH};
use crate::sech_series::{build_series, gamma_from_f64};
use crate::stokes_smoothing::{integrate_multiplier, StokesFrame, MIN_STEPS};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "KDV5_OUT_DIR";

/// `explicit`, else `$KDV5_OUT_DIR`, else `./out`.
pub fn output_dir(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out")),
    }
}

/// Write through a temporary file in the same directory and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
}

/// What a command produced: its manifest plus lines meant for the terminal.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: Vec<String>,
}

struct Run {
    command: &'static str,
    parameters: Value,
    dir: PathBuf,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Run {
    fn start(command: &'static str, parameters: Value, dir: &Path) -> Self {
        Run {
            command,
            parameters,
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(mut self, summary: Vec<String>) -> Result<RunOutcome> {
        let manifest_path = self.dir.join(format!("{}_manifest.json", self.command));
        self.outputs.push(manifest_path.clone());
        let manifest = RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        write_atomic(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;
        Ok(RunOutcome { manifest, summary })
    }
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Tag used in per-ε file names, e.g. `0.0500`.
pub fn epsilon_tag(eps: f64) -> String {
    format!("{eps:.4}")
}

/// Exact coefficient table as JSON; prints the speed corrections.
pub fn cmd_series(n_max: usize, gamma: f64, dir: &Path) -> Result<RunOutcome> {
    let g = gamma_from_f64(gamma)?;
    let table = build_series(n_max, g)?;
    let mut run = Run::start("series", json!({"n_max": n_max, "gamma": gamma}), dir);
    run.write(
        "series_table.json",
        &serde_json::to_string_pretty(&table.to_json())?,
    )?;
    let c: Vec<String> = table
        .eigenvalue_corrections()
        .iter()
        .map(|c| c.to_string())
        .collect();
    run.finish(vec![format!("c = [{}]", c.join(", "))])
}

pub fn cmd_lambda(
    n_max: usize,
    order: usize,
    gamma: f64,
    emit_csv: bool,
    dir: &Path,
) -> Result<RunOutcome> {
    if n_max < MIN_DEPTH {
        return Err(Error::InsufficientData(format!(
            "n_max = {n_max} is too shallow; at least {MIN_DEPTH} orders are needed"
        )));
    }
    let g = gamma_from_f64(gamma)?;
    let table = build_series(n_max, g)?;
    let report = analyse(&table, order)?;
    let mut run = Run::start(
        "lambda",
        json!({"n_max": n_max, "order": order, "gamma": gamma, "emit_csv": emit_csv}),
        dir,
    );
    run.write(
        "lambda_report.json",
        &serde_json::to_string_pretty(&report.to_json())?,
    )?;
    if emit_csv {
        run.write("lambda.csv", &report.lambda_csv())?;
    }
    let f = report.lambda_final;
    run.finish(vec![
        format!("beta = {}", report.beta_exponent),
        format!(
            "lambda_final = {:.6} (± {:.1e}, order {})",
            f.estimate, f.error_bound, f.order
        ),
    ])
}

/// Reads `lambda_final` back from a report written by [`cmd_lambda`].
pub fn lambda_from_report(path: &Path) -> Result<f64> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    doc.get("lambda_final")
        .and_then(|v| v.get("estimate"))
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Format(format!("{} has no lambda_final.estimate", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesArgs {
    pub r: f64,
    pub lambda: f64,
    pub rho: Option<f64>,
    pub steps: usize,
    /// Half-width of the θ span around the Stokes line.
    pub half_span: f64,
}

impl Default for StokesArgs {
    fn default() -> Self {
        StokesArgs {
            r: std::f64::consts::FRAC_PI_2,
            lambda: crate::DEFAULT_LAMBDA,
            rho: None,
            steps: 2000,
            half_span: std::f64::consts::FRAC_PI_2,
        }
    }
}

fn format_complex(z: Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

/// One profile CSV per ε plus a JSON summary of the jumps.
pub fn cmd_stokes_profile(epsilons: &[f64], args: &StokesArgs, dir: &Path) -> Result<RunOutcome> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one epsilon is required".into(),
        ));
    }
    if args.steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!(
            "steps must be at least {MIN_STEPS}"
        )));
    }
    check_positive(args.half_span, "theta half-span")?;
    let mid = -std::f64::consts::FRAC_PI_2;
    let span = (mid - args.half_span, mid + args.half_span);
    let frames = epsilons
        .iter()
        .map(|&e| {
            let f = StokesFrame::new(args.r, e, args.lambda)?;
            match args.rho {
                Some(rho) => f.with_rho(rho),
                None => Ok(f),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let profiles = frames
        .iter()
        .map(|f| integrate_multiplier(f, span, args.steps))
        .collect::<Result<Vec<_>>>()?;

    let mut run = Run::start(
        "stokes-profile",
        json!({
            "epsilon": epsilons, "r": args.r, "lambda": args.lambda, "rho": args.rho,
            "steps": args.steps, "theta_span": [span.0, span.1],
        }),
        dir,
    );
    let mut summary = Vec::new();
    let mut records = Vec::new();
    for (f, p) in frames.iter().zip(&profiles) {
        run.write(
            &format!("stokes_profile_eps{}.csv", epsilon_tag(f.epsilon)),
            &p.to_csv(f),
        )?;
        let (ratio, deviation) = if args.lambda == 0.0 {
            (None, None)
        } else {
            (Some(p.jump_ratio()), Some(p.max_deviation_from_erf(f)))
        };
        summary.push(match ratio {
            Some(q) => format!(
                "epsilon = {} rho = {:.4} jump_ratio = {} max_deviation = {:.4}",
                f.epsilon,
                f.rho,
                format_complex(q),
                deviation.unwrap_or(f64::NAN)
            ),
            None => format!("epsilon = {} flat profile (lambda = 0)", f.epsilon),
        });
        records.push(json!({
            "epsilon": f.epsilon,
            "rho": f.rho,
            "jump_numeric": [p.jump_numeric.re, p.jump_numeric.im],
            "jump_closed_form": [p.jump_closed_form.re, p.jump_closed_form.im],
            "jump_ratio": ratio.map(|q| [q.re, q.im]),
            "max_deviation_from_erf": deviation,
        }));
    }
    run.write(
        "stokes_summary.json",
        &serde_json::to_string_pretty(&records)?,
    )?;
    run.finish(summary)
}

/// Minimal-tail measurements for each ε as JSON lines, solution dumps, and
/// the exponent fit when at least four ε are given.
pub fn cmd_tails(epsilons: &[f64], options: &SweepOptions, dir: &Path) -> Result<RunOutcome> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one epsilon is required".into(),
        ));
    }
    for &e in epsilons {
        check_positive(e, "epsilon")?;
        let cfg = options.config(e);
        cfg.validate()?;
        bvp::check_window(&cfg, options.lambda)?;
    }
    let results = bvp::tail_sweep(epsilons, options)?;
    let mut run = Run::start(
        "tails",
        json!({
            "epsilon": epsilons, "gamma": options.gamma, "lambda": options.lambda,
            "domain_length": options.half_length, "grid_h": options.grid_h,
            "mode": options.mode, "estimate_discretization": options.estimate_discretization,
        }),
        dir,
    );
    let records: Vec<_> = results.iter().map(|r| r.record.clone()).collect();
    run.write("tails.jsonl", &to_json_lines(&records)?)?;
    let mut summary = Vec::new();
    for r in &results {
        let m = &r.record.measurement;
        run.write(
            &format!("solution_eps{}.csv", epsilon_tag(m.epsilon)),
            &r.solution.to_csv(),
        )?;
        summary.push(format!(
            "epsilon = {} amplitude = {:.4e} predicted = {:.4e} ratio = {:.3} wavelength = {:.4}",
            m.epsilon,
            m.amplitude_measured,
            m.amplitude_predicted,
            m.ratio(),
            m.wavelength_measured
        ));
    }
    if records.len() >= 4 {
        let ms: Vec<_> = records.iter().map(|r| r.measurement).collect();
        let fit: ExponentFit = fit_exponent(&ms)?;
        run.write("tails_fit.json", &serde_json::to_string_pretty(&fit)?)?;
        summary.push(format!(
            "slope = {:.4} (expected {:.4}) r^2 = {:.5}",
            fit.slope,
            -std::f64::consts::FRAC_PI_2 / options.gamma,
            fit.r_squared
        ));
    }
    run.finish(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationRow {
    pub n_terms: usize,
    pub partial_sum: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationComparison {
    pub epsilon: f64,
    pub x: f64,
    /// `round(|x − σ| / 2ε)`.
    pub optimal_n: usize,
    /// Number of terms before the smallest one.
    pub least_term_index: usize,
    pub term_magnitudes: Vec<f64>,
    /// Grid solution at `x`, Richardson-combined over `h` and `h/2`.
    pub reference: f64,
    /// Change of the reference when repeated on grids `h/2` and `h/4`.
    pub reference_uncertainty: f64,
    pub half_length: f64,
    pub rows: Vec<TruncationRow>,
    /// `|Λ|π ε^{−2} e^{−π/(2γε)}`.
    pub amplitude_scale: f64,
}

impl TruncationComparison {
    pub fn error_at(&self, n_terms: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n_terms == n_terms)
            .map(|r| r.error)
    }

    /// Number of terms with the smallest error against the reference.
    pub fn best_n(&self) -> usize {
        self.rows
            .iter()
            .min_by(|a, b| a.error.total_cmp(&b.error))
            .map(|r| r.n_terms)
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareArgs {
    pub gamma: f64,
    pub lambda: f64,
    /// Largest number of series terms compared.
    pub max_terms: usize,
    pub half_length: Option<f64>,
    pub grid_h: Option<f64>,
}

impl Default for CompareArgs {
    fn default() -> Self {
        CompareArgs {
            gamma: 1.0,
            lambda: crate::DEFAULT_LAMBDA,
            max_terms: 14,
            half_length: None,
            grid_h: None,
        }
    }
}

fn compare_config(epsilon: f64, args: &CompareArgs) -> SolverConfig {
    SweepOptions {
        gamma: args.gamma,
        half_length: args.half_length,
        grid_h: args.grid_h,
        ..SweepOptions::default()
    }
    .config(epsilon)
}

/// Truncated series against the minimal-tail grid solution at `x`.
pub fn compare_truncation(
    epsilon: f64,
    x: f64,
    args: &CompareArgs,
) -> Result<TruncationComparison> {
    check_positive(epsilon, "epsilon")?;
    check_positive(args.gamma, "gamma")?;
    if args.max_terms < 2 {
        return Err(Error::InvalidParameter(
            "compare at least 2 truncations".into(),
        ));
    }
    let config = compare_config(epsilon, args);
    config.validate()?;
    if !(x.is_finite() && x.abs() <= config.half_length) {
        return Err(Error::InvalidParameter(format!(
            "x = {x} lies beyond the domain half-length {}",
            config.half_length
        )));
    }
    bvp::check_window(&config, args.lambda)?;

    let table = build_series(args.max_terms - 1, gamma_from_f64(args.gamma)?)?;
    let sum = partial_sum(&table, EvalPoint::real(x, epsilon)?, args.max_terms)?;

    let tail = minimal_tail(&config, args.lambda, None)?;
    let h = tail.config.effective_h();
    let half = solve(
        &tail.config.with_grid_spacing(0.5 * h),
        Some(&tail.solution),
    )?;
    let quarter = solve(&tail.config.with_grid_spacing(0.25 * h), Some(&half))?;
    let [u1, u2, u4] = [
        tail.solution.value_at(x)?,
        half.value_at(x)?,
        quarter.value_at(x)?,
    ];
    let reference = (4.0 * u2 - u1) / 3.0;
    let finer = (4.0 * u4 - u2) / 3.0;

    let rows = (1..=args.max_terms)
        .map(|k| {
            let s = sum.prefix(k).re;
            TruncationRow {
                n_terms: k,
                partial_sum: s,
                error: (s - reference).abs(),
            }
        })
        .collect();
    Ok(TruncationComparison {
        epsilon,
        x,
        optimal_n: optimal_n(Complex64::new(x, 0.0), epsilon, args.gamma),
        least_term_index: sum.least_term_index().unwrap_or(0),
        term_magnitudes: sum.term_magnitudes.clone(),
        reference,
        reference_uncertainty: (finer - reference).abs(),
        half_length: tail.config.half_length,
        rows,
        amplitude_scale: bvp::symmetric_tail_amplitude(epsilon, args.gamma, args.lambda),
    })
}

pub fn cmd_compare(epsilon: f64, x: f64, args: &CompareArgs, dir: &Path) -> Result<RunOutcome> {
    let cmp = compare_truncation(epsilon, x, args)?;
    let mut run = Run::start(
        "compare",
        json!({
            "epsilon": epsilon, "x": x, "gamma": args.gamma, "lambda": args.lambda,
            "max_terms": args.max_terms, "domain_length": args.half_length, "grid_h": args.grid_h,
        }),
        dir,
    );
    run.write("compare.json", &serde_json::to_string_pretty(&cmp)?)?;
    let at_opt = cmp.error_at(cmp.optimal_n).unwrap_or(f64::NAN);
    let at_least = cmp.error_at(cmp.least_term_index).unwrap_or(f64::NAN);
    run.finish(vec![
        format!(
            "reference u({x}) = {:.9} (± {:.1e})",
            cmp.reference, cmp.reference_uncertainty
        ),
        format!("optimal N = {} error = {:.3e}", cmp.optimal_n, at_opt),
        format!(
            "least-term N = {} error = {:.3e}",
            cmp.least_term_index, at_least
        ),
        format!(
            "error / amplitude scale = {:.3} (scale {:.3e})",
            at_opt / cmp.amplitude_scale,
            cmp.amplitude_scale
        ),
    ])
}

/// Sweep options for `mode` with everything else defaulted.
pub fn sweep_options(gamma: f64, lambda: f64, independent: bool) -> SweepOptions {
    SweepOptions {
        gamma,
        lambda,
        mode: if independent {
            SweepMode::Independent
        } else {
            SweepMode::Continuation
        },
        ..SweepOptions::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn series_command_prints_speeds() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_series(1, 1.0, dir.path()).unwrap();
        assert_eq!(out.summary, vec!["c = [4, 16]"]);
        let out = cmd_series(0, 2.0, dir.path()).unwrap();
        assert_eq!(out.summary, vec!["c = [16]"]);
        assert!(out.manifest.outputs.iter().all(|p| p.exists()));
    }

    #[test]
    fn shallow_lambda_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_lambda(3, 3, 1.0, true, dir.path()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        assert_eq!(err.exit_code(), 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn lambda_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        cmd_lambda(12, 2, 1.0, true, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
        assert_eq!(csv.lines().count(), 14);
        let l = lambda_from_report(&dir.path().join("lambda_report.json")).unwrap();
        assert!(l < -19.0 && l > -21.0, "{l}");
    }

    #[test]
    fn flat_stokes_profile_and_one_file_per_epsilon() {
        let dir = tempfile::tempdir().unwrap();
        let args = StokesArgs {
            lambda: 0.0,
            steps: 1000,
            ..StokesArgs::default()
        };
        let out = cmd_stokes_profile(&[0.1, 0.05], &args, dir.path()).unwrap();
        assert!(out.summary[0].contains("flat"));
        for tag in ["0.1000", "0.0500"] {
            let csv = fs::read_to_string(dir.path().join(format!("stokes_profile_eps{tag}.csv")))
                .unwrap();
            assert!(csv
                .lines()
                .skip(1)
                .all(|l| l.split(',').nth(1) == Some("0.0000000000e0")));
        }
    }

    #[test]
    fn invalid_requests_fail_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let args = StokesArgs::default();
        assert!(cmd_stokes_profile(&[0.1, -0.05], &args, dir.path()).is_err());
        let opts = sweep_options(1.0, crate::DEFAULT_LAMBDA, false);
        let err = cmd_tails(&[0.03], &opts, dir.path()).unwrap_err();
        assert!(matches!(err, Error::WindowContaminated { .. }));
        assert_eq!(err.exit_code(), 2);
        let err = cmd_compare(0.1, 1e3, &CompareArgs::default(), dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn output_dir_precedence() {
        assert_eq!(output_dir(Some(Path::new("x/y"))), PathBuf::from("x/y"));
    }
}
