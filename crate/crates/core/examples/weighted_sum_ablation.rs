//! Test accuracy of a toy MLP under vanilla SGD, SAM, GSAM over an `alpha`
//! grid, and the weighted objective `f_p + lambda h` over a `lambda` grid.
//!
//! `cargo run --release --example weighted_sum_ablation`

use gsam::harness::{mean, sweep_configs, EigenPolicy, ExperimentConfig};
use gsam::Variant;

pub const CONFIG: &str = r#"
name = "ablation"
seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
total_steps = 5000
log_every = 100

[objective]
kind = "mlp"
layer_sizes = [2, 16, 3]
activation = "tanh"
data = { seed = 7, n_per_class = 40, dim = 2, classes = 3, spread = 0.8 }
test_n_per_class = 200

[optimizer]
variant = "gsam"
rho_max = 1.0
rho_min = 0.2

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

pub const ALPHAS: [f64; 3] = [0.1, 0.2, 0.4];
pub const LAMBDAS: [f64; 3] = [0.1, 0.3, 0.5];

/// One row per optimizer setting: `(variant, alpha, lambda, mean test accuracy)`.
pub struct Ablation {
    pub rows: Vec<(Variant, f64, f64, f64)>,
}

impl Ablation {
    fn best(&self, v: Variant) -> f64 {
        self.rows.iter().filter(|r| r.0 == v).map(|r| r.3).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn vanilla(&self) -> f64 {
        self.best(Variant::Vanilla)
    }
    pub fn sam(&self) -> f64 {
        self.best(Variant::Sam)
    }
    pub fn best_gsam(&self) -> f64 {
        self.best(Variant::Gsam)
    }
    pub fn best_weighted_sum(&self) -> f64 {
        self.best(Variant::WeightedSum)
    }
}

pub fn configs() -> Vec<ExperimentConfig> {
    let base = ExperimentConfig::from_toml_str(CONFIG).expect("built-in config is valid");
    assert_eq!(base.eigen.policy, EigenPolicy::Off);
    let mut settings = vec![(Variant::Vanilla, 0.0, 0.0), (Variant::Sam, 0.0, 0.0)];
    settings.extend(ALPHAS.iter().map(|&a| (Variant::Gsam, a, 0.0)));
    settings.extend(LAMBDAS.iter().map(|&l| (Variant::WeightedSum, 0.0, l)));
    settings
        .into_iter()
        .map(|(v, a, l)| {
            let mut c = base.clone();
            c.name = format!("{}_a{a}_l{l}", v.label());
            c.optimizer.variant = v;
            c.optimizer.alpha = a;
            c.optimizer.lambda = l;
            if v == Variant::Vanilla {
                c.optimizer.rho_max = 0.0;
                c.optimizer.rho_min = 0.0;
            }
            c
        })
        .collect()
}

pub fn run_example(parallelism: usize) -> gsam::Result<Ablation> {
    let configs = configs();
    let result = sweep_configs(&configs, parallelism)?;
    let per_point = configs[0].seeds.len();
    let rows = configs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let acc: Vec<f64> = result.runs[k * per_point..(k + 1) * per_point]
                .iter()
                .map(|r| r.summary().and_then(|s| s.test_accuracy).unwrap_or(f64::NAN))
                .collect();
            (c.optimizer.variant, c.optimizer.alpha, c.optimizer.lambda, mean(&acc).unwrap_or(f64::NAN))
        })
        .collect();
    Ok(Ablation { rows })
}

fn main() -> gsam::Result<()> {
    let a = run_example(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    println!("variant        alpha  lambda  mean test acc");
    for (v, al, la, acc) in &a.rows {
        println!("{:<14} {al:>5} {la:>7} {acc:>14.4}", v.label());
    }
    println!(
        "best: gsam {:.4}  weighted_sum {:.4}  sam {:.4}  vanilla {:.4}",
        a.best_gsam(),
        a.best_weighted_sum(),
        a.sam(),
        a.vanilla()
    );
    Ok(())
}
