//! Command-line front end: `run`, `sweep`, `eigen`, `compare`.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numeric failure,
//! 3 I/O error. `GSAM_OUTPUT_ROOT`, when set, is prepended to relative
//! output directories.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{GsamError, Result};

use super::config::load_config;
use super::output::{to_json, write_file, write_outputs, Checkpoint};
use super::run::{eigen_batch, run, RunStatus};
use super::sweep::{aggregate, aggregate_csv, compare, expand_grid, sweep, write_sweep, GridAxis};
use crate::sharpness::{sharpness_report, SharpnessConfig};

pub const OUTPUT_ROOT_ENV: &str = "GSAM_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "gsam", version, about = "Surrogate-gap guided sharpness-aware minimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one config for one seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configs over all their seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2,...`, repeatable.
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sharpness report at a checkpoint.
    Eigen {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        rho: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Tabulate the summaries of finished runs.
    Compare {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
    },
}

/// Applies the output-root override to relative paths.
pub fn output_path(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Executes a parsed command, printing progress to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = load_config(&config)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let out = out
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| GsamError::Config("no --out given and config has no output_dir".into()))?;
            let result = run(&cfg, seed)?;
            let paths = write_outputs(&result, &output_path(&out))?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            println!("{} steps in {:.2}s", result.summary.steps_completed, result.summary.wall_clock_seconds);
            if let RunStatus::Failed { step, message } = &result.summary.status {
                eprintln!("run diverged at step {step}: {message}");
                return Err(GsamError::Numeric {
                    step: Some(*step),
                    quantity: "run",
                });
            }
            Ok(())
        }
        Command::Sweep {
            config,
            grid,
            parallel,
            out,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| GsamError::io(&config, e))?;
            let base: toml::Table = text.parse().map_err(|e: toml::de::Error| GsamError::Parse {
                path: config.clone(),
                message: e.to_string(),
            })?;
            let axes = grid.iter().map(|g| GridAxis::parse(g)).collect::<Result<Vec<_>>>()?;
            let points = expand_grid(&base, &axes)?;
            let result = sweep(&points, parallel)?;
            write_sweep(&result, &output_path(&out))?;
            print!("{}", aggregate_csv(&aggregate(&result)));
            let failed = result.runs.iter().filter(|r| r.summary().is_none_or(|s| !s.status.is_completed())).count();
            if failed > 0 {
                eprintln!("{failed} of {} runs failed", result.runs.len());
            }
            Ok(())
        }
        Command::Eigen {
            checkpoint,
            rho,
            iters,
            tol,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let built = ck.config.objective.build()?;
            let mut scfg = SharpnessConfig {
                rho,
                stationarity_tol: ck.config.eigen.stationarity_tol,
                ..SharpnessConfig::default()
            };
            scfg.power.max_iters = iters;
            scfg.power.tol = tol;
            scfg.power.seed = ck.seed;
            let batch = eigen_batch(&built.spec, ck.config.eigen.subset_fraction, ck.seed);
            let report = sharpness_report(&built.spec, &ck.state.params, &batch, &scfg)?;
            print!("{}", to_json(&report)?);
            Ok(())
        }
        Command::Compare { out, run_dirs } => {
            let table = compare(&run_dirs)?;
            let out = output_path(&out);
            std::fs::create_dir_all(&out).map_err(|e| GsamError::io(&out, e))?;
            write_file(&out.join("compare.csv"), &table)?;
            print!("{table}");
            Ok(())
        }
    }
}

/// Parses `args`, executes, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
