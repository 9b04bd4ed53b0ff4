//! Distribution of the angle between `g` and `g_p` over a healthy toy-MLP
//! run with a small perturbation radius.
//!
//! `cargo run --release --example angle_distribution`

use gsam::harness::{median, run, ExperimentConfig};
use gsam::Variant;

pub const CONFIG: &str = r#"
name = "angles"
seeds = [0, 1, 2, 3, 4]
total_steps = 5000
log_every = 10

[objective]
kind = "mlp"
layer_sizes = [2, 16, 3]
activation = "tanh"
data = { seed = 7, n_per_class = 40, dim = 2, classes = 3, spread = 0.8 }
test_n_per_class = 200

[optimizer]
variant = "gsam"
alpha = 0.4
rho_max = 0.1
rho_min = 0.02

[base]
kind = "sgd_momentum"
momentum = 0.9

[lr]
shape = "linear_decay"
lr_max = 0.2
lr_min = 0.02
warmup_steps = 100

[eigen]
policy = "off"
"#;

/// Every logged `cos_theta` of SAM and GSAM runs over all seeds.
pub fn run_example() -> gsam::Result<Vec<f64>> {
    let base = ExperimentConfig::from_toml_str(CONFIG).expect("built-in config is valid");
    let mut cos = Vec::new();
    for v in [Variant::Sam, Variant::Gsam] {
        let mut c = base.clone();
        c.optimizer.variant = v;
        for &seed in &c.seeds {
            cos.extend(run(&c, seed)?.traces.iter().map(|t| t.cos_theta));
        }
    }
    Ok(cos)
}

/// `(min, 5th percentile, median, max)`.
pub fn quantiles(xs: &[f64]) -> (f64, f64, f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let p5 = v[(v.len() as f64 * 0.05) as usize];
    (v[0], p5, median(&v).unwrap_or(f64::NAN), v[v.len() - 1])
}

fn main() -> gsam::Result<()> {
    let cos = run_example()?;
    let (min, p5, med, max) = quantiles(&cos);
    println!("{} logged steps", cos.len());
    println!("cos theta: min {min:.4}  p5 {p5:.4}  median {med:.4}  max {max:.4}");
    let mut bins = [0usize; 10];
    for c in &cos {
        bins[((c.clamp(0.0, 0.9999)) * 10.0) as usize] += 1;
    }
    for (i, b) in bins.iter().enumerate() {
        println!("[{:.1}, {:.1})  {b}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
    }
    Ok(())
}
