//! Command line front end for the radiomics pipeline.

mod commands;
mod config;
mod error;
mod manifest;
mod synth;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Parser)]
#[command(name = "radiomics", about = "PET/CT radiomic feature extraction and outcome modelling")]
struct Cli {
    /// Optional key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all stochastic steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with a planted outcome effect.
    Synthesize {
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the per-patient feature table from a cohort manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-feature association with each outcome, with FDR control.
    Univariate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the radiomic, clinical and combined models on the training split.
    Build {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate persisted models on the test split.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign risk groups on the test split and compare their survival.
    Stratify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let ensure_out = |out: &PathBuf| -> Result<()> {
        std::fs::create_dir_all(out)?;
        Ok(())
    };
    match &cli.command {
        Command::Synthesize { out } => {
            ensure_out(out)?;
            let s = synth::synthesize(&cfg, cli.seed, out)?;
            println!(
                "synthesized {} patients ({} events, {} train / {} test) under {}",
                s.n_patients,
                s.n_events,
                s.n_train,
                s.n_test,
                out.display()
            );
        }
        Command::Extract { manifest, out } => {
            ensure_out(out)?;
            let s = commands::cmd_extract(manifest, &cfg, out)?;
            println!(
                "extracted {} patients ({} cached, {} failed); features.csv written",
                s.n_extracted, s.n_cached, s.n_failed
            );
        }
        Command::Univariate { manifest, features, out } => {
            ensure_out(out)?;
            let s = commands::cmd_univariate(features, manifest, &cfg, out)?;
            println!("univariate.csv written ({} feature-outcome rows)", s.n_rows);
        }
        Command::Build { manifest, features, out } => {
            ensure_out(out)?;
            let s = commands::cmd_build(features, manifest, &cfg, cli.seed, out)?;
            println!(
                "built models for {}: order {} ({}), staging group {}, weight {:.1}",
                s.outcome,
                s.chosen_order,
                s.chosen_features.join(", "),
                s.staging_group,
                s.oversampling_weight
            );
        }
        Command::Evaluate { manifest, features, models, out } => {
            ensure_out(out)?;
            let r = commands::cmd_evaluate(features, manifest, models, &cfg, out)?;
            for m in &r.models {
                println!(
                    "{}: auc {}",
                    m.model,
                    m.auc.map_or("NA".to_string(), |a| format!("{a:.3}"))
                );
            }
        }
        Command::Stratify { manifest, features, models, out } => {
            ensure_out(out)?;
            let s = commands::cmd_stratify(features, manifest, models, &cfg, out)?;
            println!("risk groups ({}): {:?}", s.mode, s.group_sizes);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
