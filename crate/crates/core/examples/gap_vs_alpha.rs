//! Surrogate-gap traces of two GSAM runs that differ only in `alpha`.
//!
//! Both runs share the seed, so they see the same initial weights and the
//! same minibatch at every step; the logged `h` values are directly
//! comparable step by step.
//!
//! `cargo run --release --example gap_vs_alpha [out_dir]`

use std::path::PathBuf;

use gsam::harness::{median, run, write_outputs, ExperimentConfig};

pub const CONFIG: &str = r#"
name = "gap_vs_alpha"
seeds = [0, 1, 2, 3, 4]
total_steps = 5000
log_every = 10
batch_size = 32

[objective]
kind = "mlp"
layer_sizes = [2, 16, 3]
activation = "tanh"
data = { seed = 7, n_per_class = 40, dim = 2, classes = 3, spread = 0.8 }
test_n_per_class = 200

[optimizer]
variant = "gsam"
rho_max = 0.3
rho_min = 0.06

[base]
kind = "sgd_momentum"
momentum = 0.0

[lr]
shape = "linear_decay"
lr_max = 0.2
lr_min = 0.02
warmup_steps = 100

[eigen]
policy = "off"
"#;

pub const SMALL_ALPHA: f64 = 0.2;
pub const LARGE_ALPHA: f64 = 1.0;

/// Per seed: the fraction of logged steps after warmup where the larger
/// `alpha` has the smaller gap.
pub struct GapComparison {
    pub seeds: Vec<u64>,
    pub fraction_below: Vec<f64>,
    pub mean_h: Vec<(f64, f64)>,
}

pub fn run_example(out: Option<PathBuf>) -> gsam::Result<GapComparison> {
    let base = ExperimentConfig::from_toml_str(CONFIG).expect("built-in config is valid");
    let mut cmp = GapComparison {
        seeds: base.seeds.clone(),
        fraction_below: Vec::new(),
        mean_h: Vec::new(),
    };
    for &seed in &base.seeds {
        let mut traces = Vec::new();
        for alpha in [SMALL_ALPHA, LARGE_ALPHA] {
            let mut c = base.clone();
            c.optimizer.alpha = alpha;
            c.name = format!("gap_alpha_{alpha}");
            let r = run(&c, seed)?;
            if let Some(dir) = &out {
                write_outputs(&r, &dir.join(format!("{}_seed{seed}", c.name)))?;
            }
            traces.push(r.traces.into_iter().filter(|t| t.t > c.lr.warmup_steps).map(|t| t.h).collect::<Vec<_>>());
        }
        let (small, large) = (&traces[0], &traces[1]);
        let below = small.iter().zip(large).filter(|(s, l)| l < s).count();
        cmp.fraction_below.push(below as f64 / small.len() as f64);
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        cmp.mean_h.push((avg(small), avg(large)));
    }
    Ok(cmp)
}

fn main() -> gsam::Result<()> {
    let c = run_example(std::env::args().nth(1).map(PathBuf::from))?;
    println!("seed  mean h (alpha={SMALL_ALPHA})  mean h (alpha={LARGE_ALPHA})  fraction of steps below");
    for (k, s) in c.seeds.iter().enumerate() {
        println!("{s:>4} {:>20.5} {:>20.5} {:>24.3}", c.mean_h[k].0, c.mean_h[k].1, c.fraction_below[k]);
    }
    println!("median fraction: {:.3}", median(&c.fraction_below).unwrap_or(f64::NAN));
    Ok(())
}
