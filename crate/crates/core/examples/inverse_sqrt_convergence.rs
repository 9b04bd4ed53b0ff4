//! GSAM with `eta_t = eta_0 / sqrt(t)` and `rho_t = rho_0 / sqrt(t)`: the
//! squared gradient norm averaged over the second half of training should
//! sit below the first-half average.
//!
//! `cargo run --release --example inverse_sqrt_convergence`

use gsam::harness::{run, ExperimentConfig};

pub const QUADRATIC: &str = r#"
name = "inv_sqrt_quadratic"
seeds = [0, 1, 2, 3, 4]
total_steps = 2000

[objective]
kind = "quadratic"
spectrum = [10.0, 4.0, 2.0, 1.0, 0.5, 0.1]
spectrum_seed = 3

[optimizer]
variant = "gsam"
alpha = 0.3
rho_max = 0.05

[rho]
shape = "inverse_sqrt"
rho0 = 0.05

[base]
kind = "sgd_momentum"
momentum = 0.0

[lr]
shape = "inverse_sqrt"
lr_max = 0.1

[eigen]
policy = "off"
"#;

pub const MLP: &str = r#"
name = "inv_sqrt_mlp"
seeds = [0, 1, 2, 3, 4]
total_steps = 2000

[objective]
kind = "mlp"
layer_sizes = [2, 16, 3]
activation = "tanh"
data = { seed = 7, n_per_class = 40, dim = 2, classes = 3, spread = 0.8 }

[optimizer]
variant = "gsam"
alpha = 0.3
rho_max = 0.1

[rho]
shape = "inverse_sqrt"
rho0 = 0.1

[base]
kind = "sgd_momentum"
momentum = 0.0

[lr]
shape = "inverse_sqrt"
lr_max = 0.5

[eigen]
policy = "off"
"#;

/// `(name, seed, first-half mean |g|^2, second-half mean |g|^2)`.
pub type Windows = Vec<(String, u64, f64, f64)>;

pub fn run_example() -> gsam::Result<Windows> {
    let mut out = Vec::new();
    for text in [QUADRATIC, MLP] {
        let cfg = ExperimentConfig::from_toml_str(text).expect("built-in config is valid");
        let half = cfg.total_steps / 2;
        for &seed in &cfg.seeds {
            let r = run(&cfg, seed)?;
            let sq = |lo: u64, hi: u64| {
                let xs: Vec<f64> =
                    r.traces.iter().filter(|t| t.t > lo && t.t <= hi).map(|t| t.grad_norm.powi(2)).collect();
                xs.iter().sum::<f64>() / xs.len() as f64
            };
            out.push((cfg.name.clone(), seed, sq(0, half), sq(half, cfg.total_steps)));
        }
    }
    Ok(out)
}

fn main() -> gsam::Result<()> {
    println!("objective            seed  mean |g|^2 first half  second half");
    for (name, seed, first, second) in run_example()? {
        println!("{name:<20} {seed:>4} {first:>22.3e} {second:>12.3e}");
    }
    Ok(())
}
