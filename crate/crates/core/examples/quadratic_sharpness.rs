//! Two ways to measure sharpness at a minimum, on quadratics whose spectrum
//! is known: power iteration on Hessian-vector products, and the surrogate
//! gap `h` of a radius-`rho` step along the top eigenvector, which should
//! equal `sigma_max * rho^2 / 2`.
//!
//! `cargo run --release --example quadratic_sharpness`

use gsam::objective::Quadratic;
use gsam::perturbation::{gap_at_minimum, sigma_from_gap, MinimumGapOptions, PerturbationConfig};
use gsam::rng::{substream, Purpose};
use gsam::sharpness::{power_iteration, PowerIterationConfig};
use gsam::{Batch, ObjectiveSpec, ParamVector};
use rand::Rng;

pub struct Measurement {
    pub dim: usize,
    /// Largest eigenvalue the quadratic was built with.
    pub sigma_true: f64,
    pub sigma_power: f64,
    pub power_iters: usize,
    pub sigma_gap: f64,
}

/// Random PSD spectrum with top eigenvalue in `[1, 10]` and a ratio of at
/// least `gap` between the two largest.
pub fn random_spectrum(seed: u64, index: u32, max_dim: usize, gap: f64) -> Vec<f64> {
    let mut rng = substream(seed, Purpose::Probe, index);
    let dim = rng.random_range(2..=max_dim);
    let top = rng.random_range(1.0..10.0);
    let second = top / rng.random_range(gap..3.0);
    let mut eigs = vec![top, second];
    eigs.extend((2..dim).map(|_| rng.random_range(0.0..second)));
    eigs
}

pub fn measure(eigs: &[f64], seed: u64, rho: f64, power: PowerIterationConfig) -> gsam::Result<Measurement> {
    let spec = ObjectiveSpec::Quadratic(Quadratic::from_spectrum(eigs, seed)?);
    let w = ParamVector::zeros(eigs.len());
    let batch = Batch::full();
    let eig = power_iteration(&spec, &w, &batch, &power)?;
    let opts = MinimumGapOptions {
        power,
        ..MinimumGapOptions::default()
    };
    let gap = gap_at_minimum(&spec, &w, &batch, &PerturbationConfig::new(rho)?, &opts)?;
    Ok(Measurement {
        dim: eigs.len(),
        sigma_true: eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        sigma_power: eig.sigma,
        power_iters: eig.iterations,
        sigma_gap: sigma_from_gap(gap.h, rho)?,
    })
}

pub fn run_example(n: usize, rho: f64) -> gsam::Result<Vec<Measurement>> {
    (0..n)
        .map(|k| {
            let eigs = random_spectrum(0, k as u32, 50, 1.1);
            measure(&eigs, k as u64, rho, PowerIterationConfig::default())
        })
        .collect()
}

fn main() -> gsam::Result<()> {
    println!("dim  sigma_max   power (iters)    rel err   2h/rho^2    rel err");
    for m in run_example(10, 1e-2)? {
        let rel = |x: f64| ((x - m.sigma_true) / m.sigma_true).abs();
        println!(
            "{:>3} {:>10.6} {:>10.6} ({:>3}) {:>10.1e} {:>10.6} {:>10.1e}",
            m.dim,
            m.sigma_true,
            m.sigma_power,
            m.power_iters,
            rel(m.sigma_power),
            m.sigma_gap,
            rel(m.sigma_gap)
        );
    }
    Ok(())
}
