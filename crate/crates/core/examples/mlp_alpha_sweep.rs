//! Endpoint sharpness of a toy MLP as the GSAM ascent weight `alpha` grows.
//!
//! Every run trains full-batch so the endpoint is close enough to stationary
//! for the `2h/rho^2` proxy to be defined; both sharpness measures are
//! printed per run, then the per-alpha medians.
//!
//! `cargo run --release --example mlp_alpha_sweep`

use gsam::harness::{median, spearman, sweep_configs, ExperimentConfig};

pub const CONFIG: &str = r#"
name = "mlp_alpha"
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
alpha = 0.0
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
policy = "at_end"
subset_fraction = 1.0
rho = 0.05
stationarity_tol = 0.05
max_iters = 1000
tol = 1e-6
"#;

pub const ALPHAS: [f64; 4] = [0.0, 0.1, 0.2, 0.4];

pub struct AlphaSweep {
    pub alphas: Vec<f64>,
    /// `sigma_power` per alpha, one entry per seed.
    pub sigma: Vec<Vec<f64>>,
    /// `2h/rho^2` per alpha and seed; `None` where the endpoint was not
    /// stationary enough.
    pub proxy: Vec<Vec<Option<f64>>>,
    pub test_accuracy: Vec<Vec<f64>>,
}

impl AlphaSweep {
    pub fn medians(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| median(s).unwrap_or(f64::NAN)).collect()
    }

    /// Pairs `(i < j)` whose median sharpness increases with alpha.
    pub fn inversions(&self) -> usize {
        let m = self.medians();
        (0..m.len()).flat_map(|i| (i + 1..m.len()).map(move |j| (i, j))).filter(|&(i, j)| m[j] > m[i]).count()
    }

    /// Rank correlation of the two sharpness measures over every endpoint
    /// with a proxy, and how many endpoints that is.
    pub fn proxy_agreement(&self) -> (Option<f64>, usize) {
        let (a, b): (Vec<f64>, Vec<f64>) = self
            .sigma
            .iter()
            .flatten()
            .zip(self.proxy.iter().flatten())
            .filter_map(|(s, p)| p.map(|p| (*s, p)))
            .unzip();
        (spearman(&a, &b), a.len())
    }
}

pub fn configs() -> Vec<ExperimentConfig> {
    let base = ExperimentConfig::from_toml_str(CONFIG).expect("built-in config is valid");
    ALPHAS
        .iter()
        .map(|&a| {
            let mut c = base.clone();
            c.optimizer.alpha = a;
            c.name = format!("mlp_alpha_{a}");
            c
        })
        .collect()
}

pub fn run_example(parallelism: usize) -> gsam::Result<AlphaSweep> {
    let configs = configs();
    let result = sweep_configs(&configs, parallelism)?;
    let n = configs.len();
    let mut out = AlphaSweep {
        alphas: ALPHAS.to_vec(),
        sigma: vec![Vec::new(); n],
        proxy: vec![Vec::new(); n],
        test_accuracy: vec![Vec::new(); n],
    };
    let per_point = configs[0].seeds.len();
    for r in &result.runs {
        let k = r.index / per_point;
        let s = r.outcome.as_ref().map_err(|e| gsam::GsamError::Config(e.clone()))?;
        let sharp = s.summary.sharpness.as_ref();
        out.sigma[k].push(sharp.map_or(f64::NAN, |x| x.sigma_power));
        out.proxy[k].push(sharp.and_then(|x| x.sigma_gap_proxy));
        out.test_accuracy[k].push(s.summary.test_accuracy.unwrap_or(f64::NAN));
    }
    Ok(out)
}

fn main() -> gsam::Result<()> {
    let s = run_example(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    println!("alpha  seed  sigma_power  2h/rho^2  test_acc");
    for (k, a) in s.alphas.iter().enumerate() {
        for (i, sig) in s.sigma[k].iter().enumerate() {
            let p = s.proxy[k][i].map_or("-".into(), |p| format!("{p:.4}"));
            println!("{a:>5} {i:>5} {sig:>12.4} {p:>9} {:>9.4}", s.test_accuracy[k][i]);
        }
    }
    println!("median sigma_power per alpha: {:.4?}", s.medians());
    println!("rank inversions: {}", s.inversions());
    let (rho, n) = s.proxy_agreement();
    println!("spearman(sigma_power, proxy) over {n} endpoints: {}", rho.map_or("-".into(), |r| format!("{r:.3}")));
    Ok(())
}
