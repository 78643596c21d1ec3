use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use polarguard::config::parse_override;
use polarguard::{evaluate, gates, run_experiment, ExperimentConfig, ExperimentKind};

/// Run a polar-coding secrecy experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "polarguard", version)]
struct Cli {
    /// polarize | construct | simulate-wiretap | keyagree | hash-check
    kind: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON result record here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write CSV rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Z-table cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Override any config field, e.g. `--set runs=20` or
    /// `--set 'main={"kind":"erasure","param":0.3}'`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Exit with status 2 if any gate fails.
    #[arg(long)]
    gate: bool,
}

impl Cli {
    fn overrides(&self) -> anyhow::Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_owned(), v));
            }
        };
        let quoted = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        push("seed", self.seed.map(|v| v.to_string()));
        push("n", self.n.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("trials", self.trials.map(|v| v.to_string()));
        push("threads", self.threads.map(|v| v.to_string()));
        push("out", quoted(&self.out));
        push("csv", quoted(&self.csv));
        push("cache", quoted(&self.cache));
        for s in &self.set {
            out.push(parse_override(s)?);
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.overrides().and_then(|o| {
        Ok(ExperimentConfig::from_path(
            &cli.config,
            Some(cli.kind),
            &o,
        )?)
    }) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg, cli.gate) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cfg: &ExperimentConfig, gate: bool) -> anyhow::Result<bool> {
    let record = run_experiment(cfg)?;
    if let Some(path) = &cfg.out {
        record
            .write_json(path)
            .with_context(|| format!("writing {}", path.display()))?;
    } else {
        println!("{}", serde_json::to_string_pretty(&record.metrics)?);
    }
    if let Some(path) = &cfg.csv {
        record
            .write_csv(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if !gate {
        return Ok(true);
    }
    let results = evaluate(&record);
    for g in &results {
        eprintln!("{g}");
    }
    Ok(gates::all_passed(&results))
}
