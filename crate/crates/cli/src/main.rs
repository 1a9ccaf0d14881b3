//! `fogdeploy` command-line driver.
//!
//! Settings come from built-in defaults, then the JSON config file
//! (`--config` or `FOGDEPLOY_CONFIG`), then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fogdeploy::experiment::{
    compare, load_checkpoint, oracle, save_checkpoint, save_training_log, train_agent,
    write_comparison, ExperimentConfig,
};
use fogdeploy::model::validate_bucket;
use fogdeploy::workload::{generate_bucket, generate_sweep};
use fogdeploy::{BucketSpec, Error, SsrBucket};

#[derive(Parser)]
#[command(name = "fogdeploy", version, about = "Fog/cloud serverless function placement simulator")]
struct Cli {
    /// JSON config with `generator`, `agent` and `experiment` sections.
    #[arg(long, global = true, env = "FOGDEPLOY_CONFIG")]
    config: Option<PathBuf>,

    /// Override every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one bucket and write it as JSON.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// Build a sweep bucket with exactly this many functions.
        #[arg(long)]
        total: Option<usize>,
    },
    /// Train the agent; writes a checkpoint and a training log.
    Train {
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Checkpoint path (defaults to `<out>/checkpoint.json`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate the selected algorithms over the sweep; writes result CSVs.
    Compare {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum of a small bucket.
    Oracle { bucket: PathBuf },
    /// Check a bucket file, or the config when no bucket is given.
    Validate { bucket: Option<PathBuf> },
}

/// Exit status 2 for usage and configuration problems, 1 for anything else.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Generation(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    Ok(cfg)
}

fn read_bucket(path: &Path) -> Result<BucketSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure {
        code: 1,
        message: format!("malformed bucket {}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate { out, total } => {
            cfg.generator.validate()?;
            let bucket = match total {
                Some(n) => generate_sweep(&cfg.generator, n)?,
                None => generate_bucket(&cfg.generator)?,
            };
            fs::write(&out, bucket.to_json()?).map_err(Error::from)?;
            println!(
                "wrote {} ({} requests, {} functions): {}",
                out.display(),
                bucket.ssrs.len(),
                bucket.total_functions(),
                validate_bucket(&bucket)
            );
        }
        Command::Train {
            out,
            checkpoint,
            episodes,
        } => {
            if let Some(e) = episodes {
                cfg.agent.episodes = e;
            }
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| cfg.experiment.output_dir.clone());
            let ckpt = checkpoint.unwrap_or_else(|| dir.join("checkpoint.json"));
            let log = dir.join("training_log.csv");
            let outcome = train_agent(&cfg)?;
            save_checkpoint(&ckpt, &outcome.network)?;
            save_training_log(&log, &outcome)?;
            println!(
                "trained {} episodes; checkpoint {}; log {}",
                outcome.log.len(),
                ckpt.display(),
                log.display()
            );
        }
        Command::Compare { checkpoint, out } => {
            cfg.validate()?;
            let net = match checkpoint {
                Some(path) => Some(load_checkpoint(&path)?),
                None => None,
            };
            let dir = out.unwrap_or_else(|| cfg.experiment.output_dir.clone());
            let cmp = compare(&cfg, net.as_ref())?;
            let (detail, agg) = write_comparison(&dir, &cmp)?;
            println!(
                "{} rows; wrote {} and {}",
                cmp.detail.len(),
                detail.display(),
                agg.display()
            );
        }
        Command::Oracle { bucket } => {
            let bucket = SsrBucket::new(read_bucket(&bucket)?)?;
            let r = oracle(&bucket)?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?);
        }
        Command::Validate { bucket } => match bucket {
            Some(path) => {
                let report = validate_bucket(&read_bucket(&path)?);
                if !report.is_valid() {
                    for m in report.messages() {
                        eprintln!("{m}");
                    }
                    return Err(Failure {
                        code: 1,
                        message: format!("{} is invalid", path.display()),
                    });
                }
                println!("{}: valid", path.display());
            }
            None => {
                cfg.validate()?;
                println!("config: valid");
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
