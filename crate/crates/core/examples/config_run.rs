//! Runs every seed of a TOML experiment config and writes the standard
//! artifacts (`trace.csv`, `summary.json`, `checkpoint.json`, ...) per seed.
//!
//! `cargo run --release --example config_run [config.toml] [out_dir]`
//!
//! Defaults to `configs/quadratic.toml` and a temporary directory.

use std::path::{Path, PathBuf};

use gsam::harness::{load_config, run, write_outputs, RunSummary};

pub fn run_example(config: &Path, out: &Path) -> gsam::Result<Vec<RunSummary>> {
    let cfg = load_config(config)?;
    let mut summaries = Vec::new();
    for &seed in &cfg.seeds {
        let r = run(&cfg, seed)?;
        write_outputs(&r, &out.join(format!("seed{seed}")))?;
        summaries.push(r.summary);
    }
    Ok(summaries)
}

fn main() -> gsam::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quadratic.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gsam_config_run"));
    let summaries = run_example(&config, &out)?;
    println!("seed  status     final loss   final h      sigma_power");
    for s in &summaries {
        let status = if s.status.is_completed() { "completed" } else { "failed" };
        let opt = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.4e}"));
        println!(
            "{:>4}  {status:<9} {:>11} {:>11} {:>12}",
            s.seed,
            opt(s.final_loss),
            opt(s.final_h),
            opt(s.sharpness.as_ref().map(|r| r.sigma_power))
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}
