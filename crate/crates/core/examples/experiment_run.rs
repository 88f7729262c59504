// The harness behind the `kdv5` binary: validated runs, atomic artifacts and
// a manifest per run.

use kdv5_lab::harness::{cmd_lambda, cmd_series, cmd_stokes_profile, StokesArgs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("kdv5-example-{}", std::process::id()));

    for outcome in [
        cmd_series(10, 1.0, &dir)?,
        cmd_lambda(12, 2, 1.0, true, &dir)?,
        cmd_stokes_profile(&[0.1, 0.05], &StokesArgs::default(), &dir)?,
    ] {
        let m = &outcome.manifest;
        println!("{} ({:.3}s)", m.command, m.duration_seconds);
        for line in &outcome.summary {
            println!("  {line}");
        }
        for p in &m.outputs {
            println!("  -> {}", p.display());
        }
    }

    // Bad input is rejected before anything is written.
    let err = cmd_lambda(3, 3, 1.0, false, &dir.join("never")).unwrap_err();
    println!("exit code {}: {err}", err.exit_code());
    assert!(!dir.join("never").exists());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
