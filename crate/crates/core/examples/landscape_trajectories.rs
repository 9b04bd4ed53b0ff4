//! Vanilla SGD, SAM and GSAM descending the built-in 2D surface from the same
//! starting points. Prints where each run ends up and how sharp it is there,
//! and writes `trajectory.csv` files for plotting.
//!
//! `cargo run --release --example landscape_trajectories [out_dir]`

use std::path::PathBuf;

use gsam::harness::{median, run, write_outputs, ExperimentConfig};
use gsam::Variant;

pub const CONFIG: &str = r#"
name = "landscape"
seeds = [0]
total_steps = 2000
log_every = 50

[objective]
kind = "landscape2d"

[init]
center = [1.6, 0.0]
scale = 0.3

[optimizer]
variant = "gsam"
alpha = 1.5
rho_max = 0.12
rho_min = 0.024

[base]
kind = "sgd_momentum"
momentum = 0.9

[lr]
shape = "linear_decay"
lr_max = 0.05
lr_min = 0.005

[eigen]
policy = "at_end"
max_iters = 1000
tol = 1e-9
"#;

/// Same starting point and schedule, one config per variant.
pub fn configs(seeds: &[u64]) -> Vec<ExperimentConfig> {
    let base = ExperimentConfig::from_toml_str(CONFIG).expect("built-in config is valid");
    [Variant::Vanilla, Variant::Sam, Variant::Gsam]
        .into_iter()
        .map(|v| {
            let mut c = base.clone();
            c.name = format!("landscape_{}", v.label());
            c.optimizer.variant = v;
            c.seeds = seeds.to_vec();
            c
        })
        .collect()
}

/// Endpoint `sigma_power` per variant (vanilla, SAM, GSAM), one entry per seed.
pub struct Endpoints {
    pub seeds: Vec<u64>,
    pub sigma: [Vec<f64>; 3],
}

pub fn run_example(seeds: &[u64], out: Option<PathBuf>) -> gsam::Result<Endpoints> {
    let mut sigma: [Vec<f64>; 3] = Default::default();
    for (i, cfg) in configs(seeds).iter().enumerate() {
        for &seed in seeds {
            let r = run(cfg, seed)?;
            let s = r.summary.sharpness.as_ref().map_or(f64::NAN, |s| s.sigma_power);
            sigma[i].push(s);
            if let Some(dir) = &out {
                write_outputs(&r, &dir.join(format!("{}_seed{seed}", cfg.name)))?;
            }
        }
    }
    Ok(Endpoints {
        seeds: seeds.to_vec(),
        sigma,
    })
}

fn main() -> gsam::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let seeds: Vec<u64> = (0..20).collect();
    let e = run_example(&seeds, out)?;
    println!("seed  vanilla      sam     gsam");
    for (k, seed) in e.seeds.iter().enumerate() {
        println!("{seed:>4} {:>8.3} {:>8.3} {:>8.3}", e.sigma[0][k], e.sigma[1][k], e.sigma[2][k]);
    }
    let med: Vec<f64> = e.sigma.iter().map(|s| median(s).unwrap_or(f64::NAN)).collect();
    println!("median {:>7.3} {:>8.3} {:>8.3}", med[0], med[1], med[2]);
    let wins = (0..e.seeds.len())
        .filter(|&k| e.sigma[2][k] < e.sigma[0][k].min(e.sigma[1][k]))
        .count();
    println!("gsam strictly flattest in {wins}/{} seeds", e.seeds.len());
    Ok(())
}
