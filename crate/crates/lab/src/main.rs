use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featlab_lab::{cmd_decode, cmd_gen, cmd_report, cmd_rsa, cmd_sweep, cmd_train, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "featlab", version, about = "Feature decodability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Only run this seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output root; defaults to the configuration's `out`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write datasets and their manifest.
    Gen(Common),
    /// Train and checkpoint models.
    Train(Common),
    /// Decode features from checkpoints into run records.
    Decode(Common),
    /// Similarity analysis over checkpoints.
    Rsa(Common),
    /// Train, evaluate and index every missing run.
    Sweep(Common),
    /// Summarize run records.
    Report {
        #[command(flatten)]
        common: Common,
        /// Report name; the experiment's default when omitted.
        #[arg(long)]
        report: Option<String>,
    },
    /// Print a default configuration.
    Preset {
        /// Experiment kind, e.g. binary-tradeoff.
        kind: String,
    },
}

fn load(c: &Common) -> Result<(ExperimentConfig, RunOptions), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::load(&c.config)?;
    let out = c.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| "results".into());
    Ok((
        cfg,
        RunOptions {
            out,
            seed: c.seed,
            workers: c.workers,
        },
    ))
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Gen(c) => {
            let (cfg, opts) = load(&c)?;
            let m = cmd_gen(&cfg, &opts)?;
            println!("{} datasets written under {}", m.datasets.len(), opts.out.display());
        }
        Command::Train(c) => {
            let (cfg, opts) = load(&c)?;
            cmd_train(&cfg, &opts)?;
            println!("checkpoints ready");
        }
        Command::Decode(c) => {
            let (cfg, opts) = load(&c)?;
            println!("{} records", cmd_decode(&cfg, &opts)?.len());
        }
        Command::Rsa(c) => {
            let (cfg, opts) = load(&c)?;
            println!("{} records", cmd_rsa(&cfg, &opts)?.len());
        }
        Command::Sweep(c) => {
            let (cfg, opts) = load(&c)?;
            let records = cmd_sweep(&cfg, &opts)?;
            let diverged = records.iter().filter(|r| r.diverged.is_some()).count();
            println!("{} records ({diverged} diverged)", records.len());
        }
        Command::Report { common, report } => {
            let (cfg, opts) = load(&common)?;
            let (table, paths) = cmd_report(&cfg, &opts.out, report.as_deref())?;
            println!("{}: {} rows from {} records", table.report, table.rows.len(), table.records.len());
            for p in paths {
                println!("  {}", p.display());
            }
        }
        Command::Preset { kind } => {
            let kind: ExperimentKind = serde_json::from_value(serde_json::Value::String(kind))?;
            println!("{}", serde_json::to_string_pretty(&ExperimentConfig::preset(kind))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
