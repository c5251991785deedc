//! Command-line front end: run experiments from config files, list what can
//! be run, and rebuild plot CSVs from saved reports.

use clap::{Parser, Subcommand};
use polymnn::exp::{self, ExperimentConfig, RunReport, Scale};
use polymnn::metrics::NanPolicy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polymnn", version, about = "Multiplicative-network experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write report.json plus CSVs.
    Run {
        /// Flat `key = value` config file; `experiment` is required.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's problem size (desk or full).
        #[arg(long)]
        scale: Option<Scale>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to runs/<experiment>-<scale>-seed<seed>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override how non-finite predictions are scored (propagate or skip).
        #[arg(long)]
        nan_policy: Option<NanPolicy>,
    },
    /// List experiments, models, targets, sweeps, and scales.
    ListTargets,
    /// Rebuild plot CSVs from saved reports; the two epidemic sweeps are
    /// joined on their shared steps axis when both are given.
    EmitPlots {
        /// One or more report.json paths.
        #[arg(long, required = true, num_args = 1..)]
        report: Vec<PathBuf>,
        /// Output directory for the CSVs.
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> polymnn::Result<()> {
    match cli.command {
        Command::Run {
            config,
            scale,
            seed,
            out,
            nan_policy,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(scale) = scale {
                cfg.scale = scale;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(policy) = nan_policy {
                cfg.nan_policy = policy;
            }
            cfg.validate()?;
            let out = out.unwrap_or_else(|| {
                PathBuf::from(format!("runs/{}-{}-seed{}", cfg.experiment, cfg.scale, cfg.seed))
            });
            let report = exp::run(&cfg)?;
            for path in exp::emit_report(&report, &out)? {
                println!("wrote {}", path.display());
            }
            let failures = report
                .body
                .cells
                .iter()
                .filter(|c| c.error.is_some())
                .count();
            if failures > 0 {
                eprintln!("{failures} cells failed; see report.json for details");
            }
            Ok(())
        }
        Command::ListTargets => {
            print!("{}", exp::list_targets());
            Ok(())
        }
        Command::EmitPlots { report, out } => {
            let reports = report
                .iter()
                .map(|path| RunReport::load(path))
                .collect::<polymnn::Result<Vec<_>>>()?;
            for path in exp::emit_plots(&reports, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
