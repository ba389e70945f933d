//! `svd`: run set-valued dynamics experiments from JSON configs.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use svd_core::experiment::{parse_config, reproduce, run_task, ExperimentConfig, Outcome, Overrides, Task, PRESETS};
use svd_core::Error;

#[derive(Debug, Parser)]
#[command(name = "svd", version, about = "Finite-resolution experiments for set-valued dynamical systems")]
struct Cli {
    /// entropy, entropy-se, dn-matrix, cw-check, horizon, split, separated-family,
    /// spec-check, orbit-spec, mixing, audit or reproduce
    task: String,
    /// Preset name (only with `reproduce`).
    preset: Option<String>,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force exact searches.
    #[arg(long)]
    exact: bool,
    /// Bound on orbit enumeration.
    #[arg(long, value_name = "N")]
    cap: Option<usize>,
}

fn run(cli: &Cli) -> Result<(Outcome, Option<PathBuf>), Error> {
    let task: Task = cli.task.parse()?;
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.out.as_ref().map(PathBuf::from)));
    if task == Task::Reproduce {
        let preset = cli
            .preset
            .clone()
            .or_else(|| config.as_ref().and_then(|c| c.preset.clone()))
            .ok_or_else(|| Error::Config(format!("reproduce needs a preset: {}", PRESETS.join(", "))))?;
        return Ok((reproduce(&preset)?, out));
    }
    if cli.preset.is_some() {
        return Err(Error::Config(format!("unexpected argument after task {task}")));
    }
    let config: ExperimentConfig =
        config.ok_or_else(|| Error::Config(format!("task {task} needs --config <path>")))?;
    let overrides = Overrides {
        exact: cli.exact,
        cap: cli.cap,
    };
    if overrides.cap == Some(0) {
        return Err(Error::Config("--cap must be at least 1".into()));
    }
    Ok((run_task(task, &config, overrides)?, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((outcome, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = fs::write(&path, &outcome.csv) {
                        eprintln!("svd: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    println!("{}", outcome.summary);
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    if stdout.write_all(outcome.csv.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                        return ExitCode::from(1);
                    }
                    eprintln!("{}", outcome.summary);
                }
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("svd: config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("svd: {e}");
            ExitCode::from(1)
        }
    }
}
