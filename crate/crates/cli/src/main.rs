use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Parser;

use fabsim_cli::config::parse_config;
use fabsim_cli::csv::{render_csv, write_csv};
use fabsim_cli::experiment::run_experiment;

/// Crossbar fabric and output-link scheduling experiments.
#[derive(Parser)]
#[command(name = "fabsim", version)]
struct Args {
    /// Experiment config (flat key = value file).
    #[arg(long)]
    config: PathBuf,
    /// Override the scheduler / discipline name from the config.
    #[arg(long)]
    scheduler: Option<String>,
    #[arg(long)]
    ports: Option<usize>,
    #[arg(long)]
    load: Option<f64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    replications: Option<u64>,
    /// Write CSV here instead of stdout (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg =
        parse_config(&text, base).with_context(|| format!("in {}", args.config.display()))?;

    if let Some(s) = args.scheduler {
        cfg.scheduler = s;
    }
    if let Some(p) = args.ports {
        cfg.ports = p;
    }
    if let Some(l) = args.load {
        cfg.load = Some(l);
    }
    if let Some(s) = args.slots {
        cfg.slots = s;
    }
    if let Some(w) = args.warmup {
        cfg.warmup = w;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(i) = args.iterations {
        cfg.iterations = i;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }

    let output = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => write_csv(&output.header, &output.rows, path)?,
        None => print!("{}", render_csv(&output.header, &output.rows)),
    }
    Ok(())
}
