use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use virial_lab::config::{ExperimentConfig, Kind};
use virial_lab::output::write_outputs;
use virial_lab::run_with_threads;

/// Run one configured experiment and write series.csv / summary.json.
#[derive(Debug, Parser)]
#[command(name = "virial-lab", version)]
struct Cli {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` or `out/<kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; `VIRIAL_LAB_THREADS` takes precedence.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, virial_lab::LabError> {
    let mut cfg = ExperimentConfig::from_path(&cli.config)?;
    if cfg.kind != cli.kind {
        return Err(virial_lab::LabError::Config(format!(
            "config is for {} but {} was requested",
            cfg.kind.as_str(),
            cli.kind.as_str()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let threads = std::env::var("VIRIAL_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(cli.threads);
    let out_dir = cli
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.as_str()));
    let result = run_with_threads(&cfg, threads)?;
    write_outputs(&out_dir, &cfg, &result)?;
    for v in &result.verdicts {
        println!("{} {}: {} (threshold {})", if v.pass { "PASS" } else { "FAIL" }, v.name, v.measured, v.threshold);
    }
    Ok(result.all_pass())
}
