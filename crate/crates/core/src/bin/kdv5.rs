use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kdv5_lab::harness::{self, CompareArgs, StokesArgs, OUT_DIR_ENV};
use kdv5_lab::{Result, DEFAULT_LAMBDA};

#[derive(Parser)]
#[command(
    version,
    about = "Exponential asymptotics experiments for the fifth-order KdV wave"
)]
struct Cli {
    /// Output directory
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct LambdaSource {
    /// Tail constant Λ
    #[arg(long, default_value_t = DEFAULT_LAMBDA, allow_negative_numbers = true)]
    lambda: f64,
    /// Take Λ from a report written by `lambda`
    #[arg(long, conflicts_with = "lambda")]
    lambda_from: Option<PathBuf>,
}

impl LambdaSource {
    fn value(&self) -> Result<f64> {
        match &self.lambda_from {
            Some(p) => harness::lambda_from_report(p),
            None => Ok(self.lambda),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the exact coefficient table
    Series {
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Late-term analysis and the extrapolated tail constant
    Lambda {
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Also write (n, Λ_n) as CSV
        #[arg(long)]
        emit_csv: bool,
    },
    /// Integrate the Stokes multiplier across the Stokes line
    StokesProfile {
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        epsilon: Vec<f64>,
        /// Distance from the singularity
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        r: f64,
        /// Truncation offset; default from the optimal truncation
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[command(flatten)]
        lambda: LambdaSource,
    },
    /// Solve the full equation and measure the oscillatory tails
    Tails {
        #[arg(long, value_delimiter = ',', default_value = "0.08,0.1,0.12,0.15")]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Starting half-length L (default 12 + 20πε)
        #[arg(long)]
        domain_length: Option<f64>,
        /// Grid spacing (default ε/20)
        #[arg(long)]
        grid_h: Option<f64>,
        /// Solve every ε from scratch, in parallel
        #[arg(long)]
        independent: bool,
        /// Skip the h/2 re-solve
        #[arg(long)]
        no_error_estimate: bool,
        #[command(flatten)]
        lambda: LambdaSource,
    },
    /// Truncated series against the grid solution at one point
    Compare {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Largest number of series terms
        #[arg(long, default_value_t = 14)]
        order: usize,
        #[arg(long)]
        domain_length: Option<f64>,
        #[arg(long)]
        grid_h: Option<f64>,
        #[command(flatten)]
        lambda: LambdaSource,
    },
}

fn run(cli: Cli) -> Result<harness::RunOutcome> {
    let dir = harness::output_dir(cli.out.as_deref());
    match cli.command {
        Command::Series { n_max, gamma } => harness::cmd_series(n_max, gamma, &dir),
        Command::Lambda {
            n_max,
            order,
            gamma,
            emit_csv,
        } => harness::cmd_lambda(n_max, order, gamma, emit_csv, &dir),
        Command::StokesProfile {
            epsilon,
            r,
            rho,
            steps,
            lambda,
        } => {
            let args = StokesArgs {
                r,
                rho,
                steps,
                lambda: lambda.value()?,
                ..StokesArgs::default()
            };
            harness::cmd_stokes_profile(&epsilon, &args, &dir)
        }
        Command::Tails {
            epsilon,
            gamma,
            domain_length,
            grid_h,
            independent,
            no_error_estimate,
            lambda,
        } => {
            let mut opts = harness::sweep_options(gamma, lambda.value()?, independent);
            opts.half_length = domain_length;
            opts.grid_h = grid_h;
            opts.estimate_discretization = !no_error_estimate;
            harness::cmd_tails(&epsilon, &opts, &dir)
        }
        Command::Compare {
            epsilon,
            x,
            gamma,
            order,
            domain_length,
            grid_h,
            lambda,
        } => {
            let args = CompareArgs {
                gamma,
                lambda: lambda.value()?,
                max_terms: order,
                half_length: domain_length,
                grid_h,
            };
            harness::cmd_compare(epsilon, x, &args, &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for p in &outcome.manifest.outputs {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
